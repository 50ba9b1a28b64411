#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wsdo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// A row of racks running parallel to the x axis. Rows are centred along the
// floor width; the walkable margin left at each end forms the cross aisles.
struct RackRow {
  double offset = 0.0; // y of the front face, meters
  double depth = 0.0;
  double length = 0.0;
  int slot_count = 1;
};

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
};

// aisle_widths holds one entry per gap: the front-wall aisle, one between
// each pair of consecutive rows, and the back-wall aisle (rows + 1 entries).
struct Layout {
  double floor_width = 0.0;
  double floor_depth = 0.0;
  std::vector<RackRow> rack_rows;
  std::vector<double> aisle_widths;
  Point depot;
};

struct Product {
  std::string id;
  int popularity_rank = 1;
};

struct SlotId {
  int row = 0;
  int index = 0;
  auto operator<=>(const SlotId&) const = default;
};

using SlotAssignment = std::map<std::string, SlotId>;

struct OrderLine {
  std::string product_id;
  int quantity = 1;
};

struct Order {
  std::string id;
  std::int64_t timestamp = 0;
  std::vector<OrderLine> lines;
};

struct SimParams {
  double picker_speed = 1.0;    // m/s
  double handle_time = 10.0;    // s per pick line
  double cart_width = 1.0;      // m
  double shift_length = 4.0;    // h
  double clearance_coeff = 0.01; // k, m per (picks/h)
  double cell_size = 0.5;       // m
  int max_carts = 4;
};

struct Instance {
  Layout layout;
  std::vector<Product> catalog;
  SlotAssignment assignment;
  std::vector<Order> history;
  SimParams params;
};

struct LayoutTemplate {
  int rows = 4;
  double rack_depth = 1.5;
  double row_length = 30.0;
  int slots_per_row = 60;
  double aisle_width = 2.4;
  double cross_aisle = 2.0;
};

struct GenParams {
  int num_products = 200;
  int num_orders = 400;
  double zipf_exponent = 1.0;
  double mean_lines_per_order = 2.5;
  LayoutTemplate layout;
};

inline constexpr double kDefaultMinAisle = 1.0;

// Geometry helpers.
Rect rack_footprint(const Layout& layout, std::size_t row);
std::size_t slot_total(const Layout& layout);
std::vector<SlotId> all_slots(const Layout& layout);
// Position of a slot in all_slots() order; throws if the slot does not exist.
std::size_t slot_index(const Layout& layout, SlotId slot);
bool slot_exists(const Layout& layout, SlotId slot);
// Centre of the slot's front face.
Point slot_face(const Layout& layout, SlotId slot);

Layout make_layout(const LayoutTemplate& tmpl);
// Same racks, rows repacked from the front wall with the given aisle widths.
Layout with_aisle_widths(const Layout& layout, const std::vector<double>& widths);

// Throws InvalidArgument on any broken Layout invariant. min_aisle <= 0
// skips the aisle-width lower bound.
void validate_layout(const Layout& layout, double min_aisle = 0.0);
void validate_instance(const Instance& instance);

double utilization(const Layout& layout);

Instance generate_instance(std::uint64_t seed, const GenParams& params);

// Lines per product over the order history (visits, not quantities).
std::map<std::string, double> pick_frequency(const std::vector<Order>& history);

} // namespace wsdo
