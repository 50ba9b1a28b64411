#include "wsdo/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "wsdo/error.hpp"
#include "wsdo/rng.hpp"

namespace wsdo {

namespace {

constexpr double kEps = 1e-9;

std::string padded_id(char prefix, int value, int width) {
  std::string digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width)
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

int digit_count(int n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

bool inside_rect(const Rect& r, Point p) {
  return p.x > r.x0 + kEps && p.x < r.x1 - kEps && p.y > r.y0 + kEps &&
         p.y < r.y1 - kEps;
}

} // namespace

Rect rack_footprint(const Layout& layout, std::size_t row) {
  const RackRow& r = layout.rack_rows.at(row);
  const double x0 = (layout.floor_width - r.length) / 2.0;
  return {x0, r.offset, x0 + r.length, r.offset + r.depth};
}

std::size_t slot_total(const Layout& layout) {
  std::size_t n = 0;
  for (const auto& r : layout.rack_rows) n += static_cast<std::size_t>(r.slot_count);
  return n;
}

std::vector<SlotId> all_slots(const Layout& layout) {
  std::vector<SlotId> out;
  out.reserve(slot_total(layout));
  for (std::size_t r = 0; r < layout.rack_rows.size(); ++r)
    for (int s = 0; s < layout.rack_rows[r].slot_count; ++s)
      out.push_back({static_cast<int>(r), s});
  return out;
}

bool slot_exists(const Layout& layout, SlotId slot) {
  return slot.row >= 0 && static_cast<std::size_t>(slot.row) < layout.rack_rows.size() &&
         slot.index >= 0 && slot.index < layout.rack_rows[static_cast<std::size_t>(slot.row)].slot_count;
}

std::size_t slot_index(const Layout& layout, SlotId slot) {
  if (!slot_exists(layout, slot))
    throw InvalidArgument("slot " + std::to_string(slot.row) + ":" + std::to_string(slot.index) +
                          " does not exist in the layout");
  std::size_t base = 0;
  for (int r = 0; r < slot.row; ++r)
    base += static_cast<std::size_t>(layout.rack_rows[static_cast<std::size_t>(r)].slot_count);
  return base + static_cast<std::size_t>(slot.index);
}

Point slot_face(const Layout& layout, SlotId slot) {
  if (!slot_exists(layout, slot)) throw InvalidArgument("slot does not exist");
  const Rect fp = rack_footprint(layout, static_cast<std::size_t>(slot.row));
  const auto& row = layout.rack_rows[static_cast<std::size_t>(slot.row)];
  const double width = row.length / row.slot_count;
  return {fp.x0 + (slot.index + 0.5) * width, fp.y0};
}

Layout make_layout(const LayoutTemplate& t) {
  if (t.rows < 0 || t.rack_depth <= 0 || t.row_length <= 0 || t.slots_per_row < 1 ||
      t.aisle_width <= 0 || t.cross_aisle < 0)
    throw InvalidArgument("invalid layout template");
  Layout layout;
  layout.floor_width = t.row_length + 2.0 * t.cross_aisle;
  layout.floor_depth = t.rows * t.rack_depth + (t.rows + 1) * t.aisle_width;
  double y = t.aisle_width;
  for (int r = 0; r < t.rows; ++r) {
    layout.rack_rows.push_back({y, t.rack_depth, t.row_length, t.slots_per_row});
    y += t.rack_depth + t.aisle_width;
  }
  if (t.rows > 0) layout.aisle_widths.assign(static_cast<std::size_t>(t.rows) + 1, t.aisle_width);
  layout.depot = {layout.floor_width / 2.0, 0.0};
  return layout;
}

Layout with_aisle_widths(const Layout& layout, const std::vector<double>& widths) {
  if (widths.size() != layout.aisle_widths.size())
    throw InvalidArgument("aisle width count mismatch");
  Layout out = layout;
  out.aisle_widths = widths;
  double y = 0.0;
  for (std::size_t r = 0; r < out.rack_rows.size(); ++r) {
    y += widths[r];
    out.rack_rows[r].offset = y;
    y += out.rack_rows[r].depth;
  }
  if (!widths.empty()) y += widths.back();
  if (y > out.floor_depth + kEps)
    throw InfeasibleError("aisle widths do not fit on the floor");
  return out;
}

void validate_layout(const Layout& layout, double min_aisle) {
  if (!(layout.floor_width > 0) || !(layout.floor_depth > 0))
    throw InvalidArgument("floor dimensions must be positive");
  const auto& rows = layout.rack_rows;
  if (!rows.empty() && layout.aisle_widths.size() != rows.size() + 1)
    throw InvalidArgument("expected one aisle width per gap plus both end walls");
  if (rows.empty() && layout.aisle_widths.size() > 1)
    throw InvalidArgument("aisle widths given without rack rows");
  double depth_sum = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (!(row.depth > 0) || !(row.length > 0) || row.slot_count < 1)
      throw InvalidArgument("rack row " + std::to_string(r) + " has non-positive size");
    if (row.length > layout.floor_width + kEps)
      throw InvalidArgument("rack row " + std::to_string(r) + " longer than the floor");
    const double expected = (r == 0 ? 0.0 : rows[r - 1].offset + rows[r - 1].depth) +
                            layout.aisle_widths[r];
    if (std::abs(row.offset - expected) > 1e-6)
      throw InvalidArgument("rack row " + std::to_string(r) +
                            " offset disagrees with the aisle widths");
    depth_sum += row.depth;
  }
  double aisle_sum = 0.0;
  for (double a : layout.aisle_widths) {
    if (!(a >= 0)) throw InvalidArgument("aisle widths must be non-negative");
    if (min_aisle > 0 && a < min_aisle - kEps)
      throw InvalidArgument("aisle width below the configured minimum");
    aisle_sum += a;
  }
  if (depth_sum + aisle_sum > layout.floor_depth + 1e-6)
    throw InvalidArgument("rack depths and aisle widths exceed the floor depth");
  const Point d = layout.depot;
  if (d.x < -kEps || d.x > layout.floor_width + kEps || d.y < -kEps ||
      d.y > layout.floor_depth + kEps)
    throw InvalidArgument("depot outside the floor");
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (inside_rect(rack_footprint(layout, r), d))
      throw InvalidArgument("depot inside a rack footprint");
}

void validate_instance(const Instance& inst) {
  validate_layout(inst.layout);
  const auto& p = inst.params;
  if (!(p.picker_speed > 0) || !(p.handle_time > 0) || !(p.cart_width > 0) ||
      !(p.shift_length > 0) || !(p.clearance_coeff > 0) || !(p.cell_size > 0) ||
      p.max_carts < 1)
    throw InvalidArgument("simulation parameters must be strictly positive");
  std::set<std::string> ids;
  for (const auto& prod : inst.catalog) {
    if (!ids.insert(prod.id).second) throw InvalidArgument("duplicate product id " + prod.id);
    if (prod.popularity_rank < 1) throw InvalidArgument("popularity rank must be positive");
  }
  std::set<SlotId> used;
  for (const auto& [pid, slot] : inst.assignment) {
    if (!ids.count(pid)) throw InvalidArgument("assignment names unknown product " + pid);
    if (!slot_exists(inst.layout, slot)) throw InvalidArgument("assignment uses missing slot");
    if (!used.insert(slot).second) throw InvalidArgument("two products share a slot");
  }
  for (const auto& o : inst.history) {
    if (o.lines.empty()) throw InvalidArgument("order " + o.id + " has no lines");
    for (const auto& l : o.lines) {
      if (!ids.count(l.product_id))
        throw InvalidArgument("order " + o.id + " references unknown product " + l.product_id);
      if (l.quantity < 1) throw InvalidArgument("order quantities must be >= 1");
    }
  }
}

double utilization(const Layout& layout) {
  double racks = 0.0;
  for (const auto& r : layout.rack_rows) racks += r.depth * r.length;
  return racks / (layout.floor_width * layout.floor_depth);
}

Instance generate_instance(std::uint64_t seed, const GenParams& gp) {
  if (gp.num_products < 1 || gp.num_orders < 1)
    throw InvalidArgument("product and order counts must be >= 1");
  if (!(gp.zipf_exponent > 0)) throw InvalidArgument("zipf exponent must be positive");
  if (!(gp.mean_lines_per_order >= 1)) throw InvalidArgument("mean lines per order must be >= 1");

  Instance inst;
  inst.layout = make_layout(gp.layout);
  const auto slots = all_slots(inst.layout);
  if (static_cast<std::size_t>(gp.num_products) > slots.size())
    throw CapacityError(std::to_string(gp.num_products) + " products but only " +
                        std::to_string(slots.size()) + " slots");

  Rng rng(seed);
  const int width = std::max(4, digit_count(gp.num_products));
  for (int i = 0; i < gp.num_products; ++i)
    inst.catalog.push_back({padded_id('P', i + 1, width), i + 1});

  std::vector<SlotId> shuffled = slots;
  rng.shuffle(shuffled);
  for (std::size_t i = 0; i < inst.catalog.size(); ++i)
    inst.assignment[inst.catalog[i].id] = shuffled[i];

  std::vector<double> cdf(inst.catalog.size());
  double acc = 0.0;
  for (std::size_t r = 0; r < cdf.size(); ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r + 1), gp.zipf_exponent);
    cdf[r] = acc;
  }

  std::vector<std::int64_t> stamps(static_cast<std::size_t>(gp.num_orders));
  for (auto& s : stamps) s = static_cast<std::int64_t>(rng.below(86400));
  std::sort(stamps.begin(), stamps.end());
  constexpr std::int64_t kEpochBase = 1'700'000'000;

  const int owidth = std::max(5, digit_count(gp.num_orders));
  for (int o = 0; o < gp.num_orders; ++o) {
    Order order;
    order.id = padded_id('O', o + 1, owidth);
    order.timestamp = kEpochBase + stamps[static_cast<std::size_t>(o)];
    const int lines = 1 + rng.poisson(gp.mean_lines_per_order - 1.0);
    for (int l = 0; l < lines; ++l) {
      const auto& pid = inst.catalog[rng.from_cdf(cdf)].id;
      auto it = std::find_if(order.lines.begin(), order.lines.end(),
                             [&](const OrderLine& x) { return x.product_id == pid; });
      if (it != order.lines.end())
        ++it->quantity;
      else
        order.lines.push_back({pid, 1});
    }
    inst.history.push_back(std::move(order));
  }
  return inst;
}

std::map<std::string, double> pick_frequency(const std::vector<Order>& history) {
  std::map<std::string, double> freq;
  for (const auto& o : history)
    for (const auto& l : o.lines) freq[l.product_id] += 1.0;
  return freq;
}

} // namespace wsdo
