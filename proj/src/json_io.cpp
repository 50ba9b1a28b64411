#include "wsdo/json_io.hpp"

#include <fstream>
#include <sstream>

#include "wsdo/error.hpp"

namespace wsdo {

void to_json(json& j, const Point& p) { j = json{{"x", p.x}, {"y", p.y}}; }
void from_json(const json& j, Point& p) {
  j.at("x").get_to(p.x);
  j.at("y").get_to(p.y);
}

void to_json(json& j, const RackRow& r) {
  j = json{{"offset", r.offset}, {"depth", r.depth}, {"length", r.length},
           {"slot_count", r.slot_count}};
}
void from_json(const json& j, RackRow& r) {
  j.at("offset").get_to(r.offset);
  j.at("depth").get_to(r.depth);
  j.at("length").get_to(r.length);
  j.at("slot_count").get_to(r.slot_count);
}

void to_json(json& j, const Layout& l) {
  j = json{{"floor_width", l.floor_width}, {"floor_depth", l.floor_depth},
           {"rack_rows", l.rack_rows},     {"aisle_widths", l.aisle_widths},
           {"depot", l.depot}};
}
void from_json(const json& j, Layout& l) {
  j.at("floor_width").get_to(l.floor_width);
  j.at("floor_depth").get_to(l.floor_depth);
  j.at("rack_rows").get_to(l.rack_rows);
  j.at("aisle_widths").get_to(l.aisle_widths);
  j.at("depot").get_to(l.depot);
}

void to_json(json& j, const Product& p) {
  j = json{{"id", p.id}, {"popularity_rank", p.popularity_rank}};
}
void from_json(const json& j, Product& p) {
  j.at("id").get_to(p.id);
  j.at("popularity_rank").get_to(p.popularity_rank);
}

// Slot ids travel as [row, index].
void to_json(json& j, const SlotId& s) { j = json::array({s.row, s.index}); }
void from_json(const json& j, SlotId& s) {
  if (!j.is_array() || j.size() != 2) throw InvalidArgument("slot id must be [row, index]");
  j.at(0).get_to(s.row);
  j.at(1).get_to(s.index);
}

void to_json(json& j, const OrderLine& l) {
  j = json{{"product_id", l.product_id}, {"quantity", l.quantity}};
}
void from_json(const json& j, OrderLine& l) {
  j.at("product_id").get_to(l.product_id);
  j.at("quantity").get_to(l.quantity);
}

void to_json(json& j, const Order& o) {
  j = json{{"id", o.id}, {"timestamp", o.timestamp}, {"lines", o.lines}};
}
void from_json(const json& j, Order& o) {
  j.at("id").get_to(o.id);
  j.at("timestamp").get_to(o.timestamp);
  j.at("lines").get_to(o.lines);
}

void to_json(json& j, const SimParams& p) {
  j = json{{"picker_speed", p.picker_speed},       {"handle_time", p.handle_time},
           {"cart_width", p.cart_width},           {"shift_length", p.shift_length},
           {"clearance_coeff", p.clearance_coeff}, {"cell_size", p.cell_size},
           {"max_carts", p.max_carts}};
}
void from_json(const json& j, SimParams& p) {
  j.at("picker_speed").get_to(p.picker_speed);
  j.at("handle_time").get_to(p.handle_time);
  j.at("cart_width").get_to(p.cart_width);
  j.at("shift_length").get_to(p.shift_length);
  j.at("clearance_coeff").get_to(p.clearance_coeff);
  j.at("cell_size").get_to(p.cell_size);
  j.at("max_carts").get_to(p.max_carts);
}

void to_json(json& j, const LayoutTemplate& t) {
  j = json{{"rows", t.rows},
           {"rack_depth", t.rack_depth},
           {"row_length", t.row_length},
           {"slots_per_row", t.slots_per_row},
           {"aisle_width", t.aisle_width},
           {"cross_aisle", t.cross_aisle}};
}
void from_json(const json& j, LayoutTemplate& t) {
  t.rows = j.value("rows", t.rows);
  t.rack_depth = j.value("rack_depth", t.rack_depth);
  t.row_length = j.value("row_length", t.row_length);
  t.slots_per_row = j.value("slots_per_row", t.slots_per_row);
  t.aisle_width = j.value("aisle_width", t.aisle_width);
  t.cross_aisle = j.value("cross_aisle", t.cross_aisle);
}

void to_json(json& j, const GenParams& g) {
  j = json{{"num_products", g.num_products},
           {"num_orders", g.num_orders},
           {"zipf_exponent", g.zipf_exponent},
           {"mean_lines_per_order", g.mean_lines_per_order},
           {"layout", g.layout}};
}
void from_json(const json& j, GenParams& g) {
  g.num_products = j.value("num_products", g.num_products);
  g.num_orders = j.value("num_orders", g.num_orders);
  g.zipf_exponent = j.value("zipf_exponent", g.zipf_exponent);
  g.mean_lines_per_order = j.value("mean_lines_per_order", g.mean_lines_per_order);
  if (j.contains("layout")) j.at("layout").get_to(g.layout);
}

void to_json(json& j, const Instance& i) {
  json assignment = json::object();
  for (const auto& [pid, slot] : i.assignment) assignment[pid] = slot;
  j = json{{"layout", i.layout},
           {"catalog", i.catalog},
           {"assignment", assignment},
           {"history", i.history},
           {"params", i.params}};
}
void from_json(const json& j, Instance& i) {
  j.at("layout").get_to(i.layout);
  j.at("catalog").get_to(i.catalog);
  i.assignment.clear();
  for (const auto& [pid, slot] : j.at("assignment").items()) i.assignment[pid] = slot.get<SlotId>();
  j.at("history").get_to(i.history);
  j.at("params").get_to(i.params);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

Instance load_instance(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  Instance inst;
  try {
    inst = j.get<Instance>();
  } catch (const json::exception& e) {
    throw IoError("instance " + path.string() + " is missing fields: " + e.what());
  }
  validate_instance(inst);
  return inst;
}

void save_instance(const std::filesystem::path& path, const Instance& instance) {
  write_text_file(path, dump(json(instance)));
}

} // namespace wsdo
