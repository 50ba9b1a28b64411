#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "wsdo/core.hpp"

namespace wsdo {

using json = nlohmann::json;

void to_json(json& j, const Point& p);
void from_json(const json& j, Point& p);
void to_json(json& j, const RackRow& r);
void from_json(const json& j, RackRow& r);
void to_json(json& j, const Layout& l);
void from_json(const json& j, Layout& l);
void to_json(json& j, const Product& p);
void from_json(const json& j, Product& p);
void to_json(json& j, const SlotId& s);
void from_json(const json& j, SlotId& s);
void to_json(json& j, const OrderLine& l);
void from_json(const json& j, OrderLine& l);
void to_json(json& j, const Order& o);
void from_json(const json& j, Order& o);
void to_json(json& j, const SimParams& p);
void from_json(const json& j, SimParams& p);
void to_json(json& j, const LayoutTemplate& t);
// Missing fields keep their defaults.
void from_json(const json& j, LayoutTemplate& t);
void to_json(json& j, const GenParams& g);
void from_json(const json& j, GenParams& g);
void to_json(json& j, const Instance& i);
void from_json(const json& j, Instance& i);

// Pretty-printed with a trailing newline; doubles keep 17 significant digits.
std::string dump(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const Instance& instance);

} // namespace wsdo
