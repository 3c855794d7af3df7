#include "wdn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "wdn/error.hpp"

namespace wdn {

namespace {

struct Token {
  std::string text;
  int column = 0;
};

struct Line {
  int number = 0;
  std::vector<Token> tokens;
};

std::vector<Token> tokenize(const std::string& raw) {
  std::string text = raw.substr(0, raw.find('#'));
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    out.push_back({text.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

[[noreturn]] void fail(const Line& line, const Token& token, const std::string& message) {
  throw ParseError(message, line.number, token.column);
}

double number(const Line& line, const Token& token) {
  double value = 0.0;
  const char* first = token.text.data();
  const char* last = first + token.text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    fail(line, token, "expected a number, found '" + token.text + "'");
  }
  return value;
}

std::int64_t integer(const Line& line, const Token& token) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.text.data(), token.text.data() + token.text.size(), value);
  if (ec != std::errc() || ptr != token.text.data() + token.text.size()) {
    fail(line, token, "expected an integer, found '" + token.text + "'");
  }
  return value;
}

std::uint64_t unsigned_integer(const Line& line, const Token& token) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.text.data(), token.text.data() + token.text.size(), value);
  if (ec != std::errc() || ptr != token.text.data() + token.text.size()) {
    fail(line, token, "expected a nonnegative integer, found '" + token.text + "'");
  }
  return value;
}

bool boolean(const Line& line, const Token& token) {
  const std::string v = upper(token.text);
  if (v == "YES" || v == "TRUE" || v == "ON" || v == "1") return true;
  if (v == "NO" || v == "FALSE" || v == "OFF" || v == "0") return false;
  fail(line, token, "expected yes or no, found '" + token.text + "'");
}

void arity(const Line& line, std::size_t min, std::size_t max, const std::string& what) {
  const std::size_t n = line.tokens.size();
  if (n >= min && n <= max) return;
  const std::string expected = min == max ? std::to_string(min) : std::to_string(min) + " to " + std::to_string(max);
  const Token& at = n > max ? line.tokens[max] : line.tokens.back();
  fail(line, at, what + ": expected " + expected + " fields, found " + std::to_string(n));
}

// Key-value sections: KEY value [value ...], each key at most once.
class KeyedSection {
 public:
  KeyedSection(std::string name, std::set<std::string> keys) : name_(std::move(name)), keys_(std::move(keys)) {}

  std::string key(const Line& line) {
    const std::string k = upper(line.tokens.front().text);
    if (!keys_.count(k)) fail(line, line.tokens.front(), "unknown keyword '" + line.tokens.front().text + "' in [" + name_ + "]");
    if (!seen_.insert(k).second) fail(line, line.tokens.front(), "duplicate keyword '" + k + "' in [" + name_ + "]");
    return k;
  }


 private:
  std::string name_;
  std::set<std::string> keys_;
  std::set<std::string> seen_;
};

const std::array<const char*, 11> kSections = {"OPTIONS", "JUNCTIONS", "TANKS",  "PIPES", "PUMPS",    "ECONOMICS",
                                               "WIND",    "FOUNDATION", "DESIGN", "LOOPS", "REFERENCE"};

struct PendingId {
  Line line;
  Token token;
  std::string id;
};

void parse_options(const std::vector<Line>& lines, InputDocument& doc) {
  KeyedSection keys("OPTIONS", {"HEADLOSS", "VISCOSITY", "DENSITY", "GRAVITY", "SPECIFIC_WEIGHT", "DAY_FACTOR",
                                "HOUR_FACTOR", "OPERATING_HOURS"});
  NetworkSpec& n = doc.network;
  for (const Line& line : lines) {
    const std::string k = keys.key(line);
    arity(line, 2, 2, k);
    const Token& v = line.tokens[1];
    if (k == "HEADLOSS") {
      const std::string m = upper(v.text);
      if (m == "HW" || m == "HAZEN-WILLIAMS") {
        n.model = HeadlossModel::HazenWilliams;
      } else if (m == "DW" || m == "DARCY-WEISBACH") {
        n.model = HeadlossModel::DarcyWeisbach;
      } else {
        fail(line, v, "unknown headloss model '" + v.text + "' (expected HW or DW)");
      }
    } else if (k == "VISCOSITY") {
      n.fluid.kinematic_viscosity = number(line, v);
    } else if (k == "DENSITY") {
      n.fluid.density = number(line, v);
    } else if (k == "GRAVITY") {
      n.fluid.gravity = number(line, v);
    } else if (k == "SPECIFIC_WEIGHT") {
      n.fluid.specific_weight = number(line, v);
    } else if (k == "DAY_FACTOR") {
      n.day_factor = number(line, v);
    } else if (k == "HOUR_FACTOR") {
      n.hour_factor = number(line, v);
    } else if (k == "OPERATING_HOURS") {
      n.operating_hours = number(line, v);
    }
  }
}

void parse_economics(const std::vector<Line>& lines, InputDocument& doc) {
  KeyedSection keys("ECONOMICS", {"ENERGY_PRICE", "INTEREST_RATE", "ESCALATION", "LIFESPAN", "MATERIAL_COST",
                                  "PIPELINE_COEFFICIENTS", "MAX_SUPPLY_VELOCITY", "SUPPLY_CATALOG",
                                  "OPERATIONAL_COST_RATE", "FILL_DURATION"});
  EconomicParams e;
  for (const Line& line : lines) {
    const std::string k = keys.key(line);
    if (k == "PIPELINE_COEFFICIENTS") {
      arity(line, 2, 9, k);
      e.pipeline_coefficients.clear();
      for (std::size_t i = 1; i < line.tokens.size(); ++i) e.pipeline_coefficients.push_back(number(line, line.tokens[i]));
      continue;
    }
    if (k == "SUPPLY_CATALOG") {
      arity(line, 2, std::numeric_limits<std::size_t>::max(), k);
      e.supply_catalog.clear();
      for (std::size_t i = 1; i < line.tokens.size(); ++i) {
        const double d = number(line, line.tokens[i]);
        if (d <= 0.0 || (!e.supply_catalog.empty() && d <= e.supply_catalog.back())) {
          fail(line, line.tokens[i], "supply catalog must be positive and strictly ascending");
        }
        e.supply_catalog.push_back(d);
      }
      continue;
    }
    arity(line, 2, 2, k);
    const double v = number(line, line.tokens[1]);
    if (k == "ENERGY_PRICE") e.energy_price = v;
    else if (k == "INTEREST_RATE") e.interest_rate = v;
    else if (k == "ESCALATION") e.energy_escalation = v;
    else if (k == "LIFESPAN") e.lifespan = v;
    else if (k == "MATERIAL_COST") e.material_unit_cost = v;
    else if (k == "MAX_SUPPLY_VELOCITY") e.max_supply_velocity = v;
    else if (k == "OPERATIONAL_COST_RATE") {
      doc.operational_cost_rate = v;
      doc.warnings.push_back("OPERATIONAL_COST_RATE is accepted but not used by any cost term");
    } else if (k == "FILL_DURATION") {
      doc.fill_duration = v;
      doc.warnings.push_back("FILL_DURATION is accepted but not used by any cost term");
    }
  }
  doc.economics = e;
}

void parse_wind(const std::vector<Line>& lines, InputDocument& doc) {
  KeyedSection keys("WIND", {"SPEED", "EXPONENT"});
  WindParams w;
  for (const Line& line : lines) {
    const std::string k = keys.key(line);
    arity(line, 2, 2, k);
    (k == "SPEED" ? w.speed : w.exponent) = number(line, line.tokens[1]);
  }
  doc.wind = w;
}

void parse_foundation(const std::vector<Line>& lines, InputDocument& doc) {
  KeyedSection keys("FOUNDATION", {"A1", "B1", "A2", "B2", "A3", "B3"});
  FoundationParams f;
  for (const Line& line : lines) {
    const std::string k = keys.key(line);
    arity(line, 2, 2, k);
    const double v = number(line, line.tokens[1]);
    if (k == "A1") f.a1 = v;
    else if (k == "B1") f.b1 = v;
    else if (k == "A2") f.a2 = v;
    else if (k == "B2") f.b2 = v;
    else if (k == "A3") f.a3 = v;
    else f.b3 = v;
  }
  doc.foundation = f;
}

void parse_design(const std::vector<Line>& lines, InputDocument& doc) {
  KeyedSection keys("DESIGN", {"P_MIN", "P_MAX", "HR_MIN", "HR_MAX", "HB_MIN", "HB_MAX", "Z_MAX", "STARTS",
                               "MAX_STARTS", "SEED", "BASELINE", "TOLERANCE"});
  DesignSettings d;
  for (const Line& line : lines) {
    const std::string k = keys.key(line);
    arity(line, 2, 2, k);
    const Token& v = line.tokens[1];
    if (k == "P_MIN") d.bounds.p_min = number(line, v);
    else if (k == "P_MAX") d.bounds.p_max = number(line, v);
    else if (k == "HR_MIN") d.bounds.h_r_min = number(line, v);
    else if (k == "HR_MAX") d.bounds.h_r_max = number(line, v);
    else if (k == "HB_MIN") d.bounds.h_b_min = number(line, v);
    else if (k == "HB_MAX") d.bounds.h_b_max = number(line, v);
    else if (k == "Z_MAX") d.bounds.z_max = number(line, v);
    else if (k == "TOLERANCE") d.tolerance = number(line, v);
    else if (k == "SEED") d.seed = unsigned_integer(line, v);
    else if (k == "BASELINE") d.baseline = boolean(line, v);
    else {
      const std::int64_t n = integer(line, v);
      if (n < 1 || n > 100000) fail(line, v, k + " must be between 1 and 100000");
      (k == "STARTS" ? d.starts : d.max_starts) = static_cast<int>(n);
    }
  }
  doc.design = d;
}

}  // namespace

bool InputDocument::operator==(const InputDocument& o) const {
  return network == o.network && economics == o.economics && wind == o.wind && foundation == o.foundation &&
         design == o.design && loops == o.loops && reference_flows == o.reference_flows &&
         reference_pressures == o.reference_pressures && operational_cost_rate == o.operational_cost_rate &&
         fill_duration == o.fill_duration;
}

InputDocument parse_input(const std::string& text) {
  std::map<std::string, std::vector<Line>> sections;
  std::map<std::string, int> header_line;
  std::string current;

  std::istringstream in(text);
  std::string raw;
  int number_of_line = 0;
  while (std::getline(in, raw)) {
    ++number_of_line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    Line line{number_of_line, tokenize(raw)};
    if (line.tokens.empty()) continue;
    const Token& first = line.tokens.front();
    if (first.text.front() == '[') {
      if (line.tokens.size() != 1 || first.text.back() != ']' || first.text.size() < 3) {
        fail(line, first, "malformed section header");
      }
      const std::string name = upper(first.text.substr(1, first.text.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
        fail(line, first, "unknown section [" + first.text.substr(1, first.text.size() - 2) + "]");
      }
      if (header_line.count(name)) fail(line, first, "duplicate section [" + name + "]");
      header_line[name] = line.number;
      sections[name];
      current = name;
      continue;
    }
    if (current.empty()) fail(line, first, "data before the first section header");
    sections[current].push_back(std::move(line));
  }

  auto require_section = [&](const std::string& name) {
    if (!header_line.count(name)) throw ParseError("missing required section [" + name + "]");
  };
  require_section("OPTIONS");
  require_section("PIPES");
  if (!header_line.count("JUNCTIONS") && !header_line.count("TANKS")) {
    throw ParseError("missing required section [JUNCTIONS] or [TANKS]");
  }

  InputDocument doc;
  parse_options(sections["OPTIONS"], doc);

  std::set<std::string> node_ids;
  for (const Line& line : sections["JUNCTIONS"]) {
    arity(line, 3, 3, "junction");
    NodeSpec n;
    n.id = line.tokens[0].text;
    if (!node_ids.insert(n.id).second) fail(line, line.tokens[0], "duplicate node id '" + n.id + "'");
    n.elevation = number(line, line.tokens[1]);
    n.demand = number(line, line.tokens[2]);
    doc.network.nodes.push_back(std::move(n));
  }
  for (const Line& line : sections["TANKS"]) {
    arity(line, 5, 6, "tank");
    NodeSpec n;
    n.kind = NodeKind::Tank;
    n.id = line.tokens[0].text;
    if (!node_ids.insert(n.id).second) fail(line, line.tokens[0], "duplicate node id '" + n.id + "'");
    n.elevation = number(line, line.tokens[1]);
    n.demand = number(line, line.tokens[2]);
    n.water_depth = number(line, line.tokens[3]);
    n.height_above_ground = number(line, line.tokens[4]);
    if (line.tokens.size() == 6) n.volume = number(line, line.tokens[5]);
    doc.network.nodes.push_back(std::move(n));
  }

  std::set<std::string> pipe_ids;
  std::vector<PendingId> node_refs;
  if (sections["PIPES"].empty()) throw ParseError("no pipes", header_line["PIPES"], 1);
  for (const Line& line : sections["PIPES"]) {
    arity(line, 6, 6, "pipe");
    PipeSpec p;
    p.id = line.tokens[0].text;
    if (!pipe_ids.insert(p.id).second) fail(line, line.tokens[0], "duplicate pipe id '" + p.id + "'");
    p.from = line.tokens[1].text;
    p.to = line.tokens[2].text;
    node_refs.push_back({line, line.tokens[1], p.from});
    node_refs.push_back({line, line.tokens[2], p.to});
    p.length = number(line, line.tokens[3]);
    p.diameter = number(line, line.tokens[4]);
    p.roughness = number(line, line.tokens[5]);
    doc.network.pipes.push_back(std::move(p));
  }

  for (const Line& line : sections["PUMPS"]) {
    arity(line, 3, 9, "pump");
    PumpSpec p;
    p.tank = line.tokens[0].text;
    node_refs.push_back({line, line.tokens[0], p.tank});
    p.elevation = number(line, line.tokens[1]);
    p.supply_length = number(line, line.tokens[2]);
    std::set<std::string> seen;
    for (std::size_t i = 3; i < line.tokens.size(); ++i) {
      const Token& t = line.tokens[i];
      const auto eq = t.text.find('=');
      if (eq == std::string::npos || eq == 0) fail(line, t, "expected key=value, found '" + t.text + "'");
      const std::string name = t.text.substr(0, eq);
      const std::string key = upper(name);
      if (!seen.insert(key).second) fail(line, t, "duplicate pump option '" + name + "'");
      const Token value{t.text.substr(eq + 1), t.column + static_cast<int>(eq) + 1};
      if (value.text.empty()) fail(line, value, "missing value for '" + name + "'");
      const double v = number(line, value);
      if (key == "DIAMETER") p.supply_diameter = v;
      else if (key == "ROUGHNESS") p.supply_roughness = v;
      else if (key == "HOURS") p.daily_hours = v;
      else if (key == "EFFICIENCY") p.efficiency = v;
      else if (key == "OPERATING_HOURS") p.operating_hours = v;
      else if (key == "RESISTANCE") p.resistance = v;
      else fail(line, t, "unknown pump option '" + name + "'");
    }
    doc.network.pumps.push_back(std::move(p));
  }

  if (header_line.count("ECONOMICS")) parse_economics(sections["ECONOMICS"], doc);
  if (header_line.count("WIND")) parse_wind(sections["WIND"], doc);
  if (header_line.count("FOUNDATION")) parse_foundation(sections["FOUNDATION"], doc);
  if (header_line.count("DESIGN")) parse_design(sections["DESIGN"], doc);

  for (const Line& line : sections["LOOPS"]) {
    SignedPipes loop;
    for (const Token& t : line.tokens) {
      int sign = 1;
      std::string id = t.text;
      if (id.front() == '-' || id.front() == '+') {
        sign = id.front() == '-' ? -1 : 1;
        id.erase(0, 1);
      }
      if (id.empty()) fail(line, t, "missing pipe id after sign");
      if (!pipe_ids.count(id)) fail(line, t, "unknown pipe '" + id + "' in loop");
      loop.emplace_back(id, sign);
    }
    doc.loops.push_back(std::move(loop));
  }

  for (const Line& line : sections["REFERENCE"]) {
    arity(line, 4, 4, "reference");
    const std::string kind = upper(line.tokens[0].text);
    const std::string& series = line.tokens[1].text;
    const std::string& id = line.tokens[2].text;
    const double v = number(line, line.tokens[3]);
    std::map<std::string, ReferenceSeries>* target = nullptr;
    if (kind == "FLOW") {
      if (!pipe_ids.count(id)) fail(line, line.tokens[2], "unknown pipe '" + id + "' in reference");
      target = &doc.reference_flows;
    } else if (kind == "PRESSURE") {
      if (!node_ids.count(id)) fail(line, line.tokens[2], "unknown node '" + id + "' in reference");
      target = &doc.reference_pressures;
    } else {
      fail(line, line.tokens[0], "unknown keyword '" + line.tokens[0].text + "' (expected FLOW or PRESSURE)");
    }
    ReferenceSeries& s = (*target)[series];
    for (const auto& [existing, _] : s) {
      if (existing == id) fail(line, line.tokens[2], "duplicate reference for '" + id + "' in series '" + series + "'");
    }
    s.emplace_back(id, v);
  }

  for (const PendingId& ref : node_refs) {
    if (!node_ids.count(ref.id)) fail(ref.line, ref.token, "unknown node '" + ref.id + "'");
  }
  return doc;
}

InputDocument read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_input(buffer.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

std::string num(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string render_input(const InputDocument& doc) {
  std::ostringstream out;
  const NetworkSpec& n = doc.network;
  out << "[OPTIONS]\n";
  out << "HEADLOSS " << (n.model == HeadlossModel::HazenWilliams ? "HW" : "DW") << "\n";
  out << "VISCOSITY " << num(n.fluid.kinematic_viscosity) << "\n";
  out << "DENSITY " << num(n.fluid.density) << "\n";
  out << "GRAVITY " << num(n.fluid.gravity) << "\n";
  out << "SPECIFIC_WEIGHT " << num(n.fluid.specific_weight) << "\n";
  out << "DAY_FACTOR " << num(n.day_factor) << "\n";
  out << "HOUR_FACTOR " << num(n.hour_factor) << "\n";
  out << "OPERATING_HOURS " << num(n.operating_hours) << "\n";

  out << "\n[JUNCTIONS]\n";
  for (const NodeSpec& node : n.nodes) {
    if (node.kind == NodeKind::Junction) out << node.id << " " << num(node.elevation) << " " << num(node.demand) << "\n";
  }
  out << "\n[TANKS]\n";
  for (const NodeSpec& node : n.nodes) {
    if (node.kind != NodeKind::Tank) continue;
    out << node.id << " " << num(node.elevation) << " " << num(node.demand) << " " << num(node.water_depth) << " "
        << num(node.height_above_ground);
    if (node.volume) out << " " << num(*node.volume);
    out << "\n";
  }
  out << "\n[PIPES]\n";
  for (const PipeSpec& p : n.pipes) {
    out << p.id << " " << p.from << " " << p.to << " " << num(p.length) << " " << num(p.diameter) << " "
        << num(p.roughness) << "\n";
  }
  if (!n.pumps.empty()) {
    out << "\n[PUMPS]\n";
    for (const PumpSpec& p : n.pumps) {
      out << p.tank << " " << num(p.elevation) << " " << num(p.supply_length);
      if (p.supply_diameter) out << " diameter=" << num(*p.supply_diameter);
      if (p.supply_roughness) out << " roughness=" << num(*p.supply_roughness);
      out << " hours=" << num(p.daily_hours) << " efficiency=" << num(p.efficiency)
          << " operating_hours=" << num(p.operating_hours);
      if (p.resistance) out << " resistance=" << num(*p.resistance);
      out << "\n";
    }
  }
  if (doc.economics) {
    const EconomicParams& e = *doc.economics;
    out << "\n[ECONOMICS]\n";
    out << "ENERGY_PRICE " << num(e.energy_price) << "\n";
    out << "INTEREST_RATE " << num(e.interest_rate) << "\n";
    out << "ESCALATION " << num(e.energy_escalation) << "\n";
    out << "LIFESPAN " << num(e.lifespan) << "\n";
    out << "MATERIAL_COST " << num(e.material_unit_cost) << "\n";
    if (!e.pipeline_coefficients.empty()) {
      out << "PIPELINE_COEFFICIENTS";
      for (double c : e.pipeline_coefficients) out << " " << num(c);
      out << "\n";
    }
    out << "MAX_SUPPLY_VELOCITY " << num(e.max_supply_velocity) << "\n";
    if (!e.supply_catalog.empty()) {
      out << "SUPPLY_CATALOG";
      for (double d : e.supply_catalog) out << " " << num(d);
      out << "\n";
    }
    if (doc.operational_cost_rate) out << "OPERATIONAL_COST_RATE " << num(*doc.operational_cost_rate) << "\n";
    if (doc.fill_duration) out << "FILL_DURATION " << num(*doc.fill_duration) << "\n";
  }
  if (doc.wind) {
    out << "\n[WIND]\nSPEED " << num(doc.wind->speed) << "\nEXPONENT " << num(doc.wind->exponent) << "\n";
  }
  if (doc.foundation) {
    const FoundationParams& f = *doc.foundation;
    out << "\n[FOUNDATION]\n";
    out << "A1 " << num(f.a1) << "\nB1 " << num(f.b1) << "\nA2 " << num(f.a2) << "\nB2 " << num(f.b2) << "\nA3 "
        << num(f.a3) << "\nB3 " << num(f.b3) << "\n";
  }
  if (doc.design) {
    const DesignSettings& d = *doc.design;
    out << "\n[DESIGN]\n";
    out << "P_MIN " << num(d.bounds.p_min) << "\nP_MAX " << num(d.bounds.p_max) << "\n";
    out << "HR_MIN " << num(d.bounds.h_r_min) << "\nHR_MAX " << num(d.bounds.h_r_max) << "\n";
    out << "HB_MIN " << num(d.bounds.h_b_min) << "\nHB_MAX " << num(d.bounds.h_b_max) << "\n";
    if (d.bounds.z_max) out << "Z_MAX " << num(*d.bounds.z_max) << "\n";
    out << "STARTS " << d.starts << "\nMAX_STARTS " << d.max_starts << "\nSEED " << d.seed << "\n";
    out << "BASELINE " << (d.baseline ? "yes" : "no") << "\nTOLERANCE " << num(d.tolerance) << "\n";
  }
  if (!doc.loops.empty()) {
    out << "\n[LOOPS]\n";
    for (const SignedPipes& loop : doc.loops) {
      for (std::size_t i = 0; i < loop.size(); ++i) {
        out << (i ? " " : "") << (loop[i].second < 0 ? "-" : "") << loop[i].first;
      }
      out << "\n";
    }
  }
  if (!doc.reference_flows.empty() || !doc.reference_pressures.empty()) {
    out << "\n[REFERENCE]\n";
    for (const auto& [series, values] : doc.reference_flows) {
      for (const auto& [id, v] : values) out << "FLOW " << series << " " << id << " " << num(v) << "\n";
    }
    for (const auto& [series, values] : doc.reference_pressures) {
      for (const auto& [id, v] : values) out << "PRESSURE " << series << " " << id << " " << num(v) << "\n";
    }
  }
  return out.str();
}

std::vector<LoopRow> loop_rows(const InputDocument& doc, const Network& network) {
  std::vector<LoopRow> rows;
  for (std::size_t l = 0; l < doc.loops.size(); ++l) {
    LoopRow row(network.pipes().size(), 0);
    for (const auto& [id, sign] : doc.loops[l]) {
      const auto pipe = network.find_pipe(id);
      if (!pipe) throw ValidationError("loop " + std::to_string(l + 1) + ": unknown pipe '" + id + "'");
      if (row[*pipe] != 0) throw ValidationError("loop " + std::to_string(l + 1) + ": pipe '" + id + "' listed twice");
      row[*pipe] = sign;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

EconomicParams economics_or_default(const InputDocument& doc) { return doc.economics.value_or(EconomicParams{}); }
WindParams wind_or_default(const InputDocument& doc) { return doc.wind.value_or(WindParams{}); }
FoundationParams foundation_or_default(const InputDocument& doc) {
  return doc.foundation.value_or(FoundationParams{});
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const std::optional<CostDeltas>& a, const std::optional<CostDeltas>& b) {
  if (a.has_value() != b.has_value()) return false;
  if (!a) return true;
  return same(a->pipeline, b->pipeline) && same(a->tank_material, b->tank_material) &&
         same(a->tank_foundation, b->tank_foundation) && same(a->pump_npv, b->pump_npv) && same(a->total, b->total);
}

nlohmann::ordered_json real(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

double real(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError("report: unexpected string '" + s + "' for a number");
  }
  return j.get<double>();
}

}  // namespace

bool DesignRow::operator==(const DesignRow& o) const {
  return feasible == o.feasible && same(max_violation, o.max_violation) && starts == o.starts &&
         evaluations == o.evaluations && baseline_total == o.baseline_total && same(deltas, o.deltas) &&
         message == o.message;
}

Report make_report(const std::string& command, const Network& network, const FlowSolution& solution) {
  Report r;
  r.command = command;
  r.model = network.model() == HeadlossModel::HazenWilliams ? "HW" : "DW";
  r.converged = solution.converged;
  r.iterations = solution.iterations;
  r.mass_residual = solution.mass_residual;
  r.energy_residual = solution.energy_residual;
  r.path_discrepancy = solution.path_discrepancy;
  for (std::size_t j = 0; j < network.pipes().size(); ++j) {
    const Pipe& p = network.pipes()[j];
    const PipeHydraulics& h = solution.pipes[j];
    const double q = solution.flows[j];
    r.pipes.push_back({p.id, q * 1e3, 4.0 * q / (kPi * p.diameter * p.diameter), headloss(h.resistance, h.exponent, q),
                       h.reynolds, h.friction});
  }
  for (std::size_t i = 0; i < network.nodes().size(); ++i) {
    const Node& n = network.nodes()[i];
    r.nodes.push_back({n.id, n.is_tank(), solution.heads[i], solution.pressures[i]});
  }
  if (!solution.converged) r.warnings.push_back(solution.message);
  return r;
}

CostRow make_cost_row(const Network& network, const CostBreakdown& cost) {
  CostRow c;
  c.pipeline = cost.pipeline;
  c.tank_material = cost.tank_material;
  c.tank_foundation = cost.tank_foundation;
  c.pump_npv = cost.pump_npv;
  c.total = cost.total;
  c.npv_factor = cost.npv_factor;
  c.wind_coefficient = cost.wind_coefficient;
  for (const TankReport& t : cost.tanks) {
    const Node& n = network.nodes()[t.tank];
    c.tanks.push_back({n.id, n.water_depth, n.height_above_ground, t.cost.volume, t.cost.diameter, t.cost.moment,
                       t.cost.force, t.cost.material, t.cost.foundation});
  }
  for (const PumpCost& p : cost.pumps) {
    c.pumps.push_back({network.nodes()[p.tank].id, p.flow * 1e3, p.supply_diameter * 1e3, p.resistance,
                       p.head.geometric, p.head.total, p.energy.power, p.energy.energy, p.energy.daily_cost, p.npv});
  }
  return c;
}

std::vector<MaeRow> reference_errors(const InputDocument& doc, const Network& network, const FlowSolution& solution) {
  std::vector<MaeRow> rows;
  auto compare = [&](const std::string& quantity, const std::string& series, const ReferenceSeries& values,
                     auto&& modeled) {
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [id, v] : values) {
      a.push_back(modeled(id));
      b.push_back(v);
    }
    MaeRow row{quantity, series, mae(a, b), 0.0, a.size()};
    for (std::size_t i = 0; i < a.size(); ++i) row.max_abs = std::max(row.max_abs, std::abs(a[i] - b[i]));
    rows.push_back(row);
  };
  for (const auto& [series, values] : doc.reference_flows) {
    compare("flow", series, values, [&](const std::string& id) { return solution.flows[*network.find_pipe(id)] * 1e3; });
  }
  for (const auto& [series, values] : doc.reference_pressures) {
    compare("pressure", series, values,
            [&](const std::string& id) { return solution.pressures[*network.find_node(id)]; });
  }
  return rows;
}

nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["command"] = r.command;
  j["model"] = r.model;
  j["solver"] = {{"converged", r.converged},
                 {"iterations", r.iterations},
                 {"mass_residual", real(r.mass_residual)},
                 {"energy_residual", real(r.energy_residual)},
                 {"path_discrepancy", real(r.path_discrepancy)}};
  j["pipes"] = nlohmann::ordered_json::array();
  for (const PipeRow& p : r.pipes) {
    j["pipes"].push_back({{"id", p.id},
                          {"flow_lps", real(p.flow)},
                          {"velocity_mps", real(p.velocity)},
                          {"headloss_m", real(p.headloss)},
                          {"reynolds", real(p.reynolds)},
                          {"friction", real(p.friction)}});
  }
  j["nodes"] = nlohmann::ordered_json::array();
  for (const NodeRow& n : r.nodes) {
    j["nodes"].push_back({{"id", n.id}, {"tank", n.tank}, {"head_m", real(n.head)}, {"pressure_m", real(n.pressure)}});
  }
  j["mae"] = nlohmann::ordered_json::array();
  for (const MaeRow& m : r.mae) {
    j["mae"].push_back({{"quantity", m.quantity},
                        {"series", m.series},
                        {"mae", real(m.mae)},
                        {"max_abs", real(m.max_abs)},
                        {"count", m.count}});
  }
  if (r.cost) {
    const CostRow& c = *r.cost;
    nlohmann::ordered_json cj{{"pipeline", real(c.pipeline)},
                              {"tank_material", real(c.tank_material)},
                              {"tank_foundation", real(c.tank_foundation)},
                              {"pump_npv", real(c.pump_npv)},
                              {"total", real(c.total)},
                              {"npv_factor", real(c.npv_factor)},
                              {"wind_coefficient", real(c.wind_coefficient)}};
    cj["tanks"] = nlohmann::ordered_json::array();
    for (const TankRow& t : c.tanks) {
      cj["tanks"].push_back({{"id", t.id},
                             {"water_depth_m", real(t.water_depth)},
                             {"height_above_ground_m", real(t.height_above_ground)},
                             {"volume_m3", real(t.volume)},
                             {"diameter_m", real(t.diameter)},
                             {"moment_kNm", real(t.moment)},
                             {"force_kN", real(t.force)},
                             {"material", real(t.material)},
                             {"foundation", real(t.foundation)}});
    }
    cj["pumps"] = nlohmann::ordered_json::array();
    for (const PumpRow& p : c.pumps) {
      cj["pumps"].push_back({{"tank", p.tank},
                             {"flow_lps", real(p.flow)},
                             {"supply_diameter_mm", real(p.supply_diameter)},
                             {"resistance", real(p.resistance)},
                             {"geometric_head_m", real(p.geometric_head)},
                             {"total_head_m", real(p.total_head)},
                             {"power_kW", real(p.power)},
                             {"energy_kWh_per_day", real(p.energy)},
                             {"daily_cost", real(p.daily_cost)},
                             {"npv", real(p.npv)}});
    }
    j["cost"] = cj;
  }
  if (r.design) {
    const DesignRow& d = *r.design;
    nlohmann::ordered_json dj{{"feasible", d.feasible},
                              {"max_violation_m", real(d.max_violation)},
                              {"starts", d.starts},
                              {"evaluations", d.evaluations}};
    dj["baseline_total"] = d.baseline_total ? real(*d.baseline_total) : nlohmann::ordered_json(nullptr);
    if (d.deltas) {
      dj["deltas"] = {{"pipeline", real(d.deltas->pipeline)},
                      {"tank_material", real(d.deltas->tank_material)},
                      {"tank_foundation", real(d.deltas->tank_foundation)},
                      {"pump_npv", real(d.deltas->pump_npv)},
                      {"total", real(d.deltas->total)}};
    } else {
      dj["deltas"] = nullptr;
    }
    dj["message"] = d.message;
    j["design"] = dj;
  }
  j["warnings"] = r.warnings;
  return j;
}

Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.command = j.at("command").get<std::string>();
  r.model = j.at("model").get<std::string>();
  const auto& s = j.at("solver");
  r.converged = s.at("converged").get<bool>();
  r.iterations = s.at("iterations").get<int>();
  r.mass_residual = real(s.at("mass_residual"));
  r.energy_residual = real(s.at("energy_residual"));
  r.path_discrepancy = real(s.at("path_discrepancy"));
  for (const auto& p : j.at("pipes")) {
    r.pipes.push_back({p.at("id").get<std::string>(), real(p.at("flow_lps")), real(p.at("velocity_mps")),
                       real(p.at("headloss_m")), real(p.at("reynolds")), real(p.at("friction"))});
  }
  for (const auto& n : j.at("nodes")) {
    r.nodes.push_back({n.at("id").get<std::string>(), n.at("tank").get<bool>(), real(n.at("head_m")),
                       real(n.at("pressure_m"))});
  }
  for (const auto& m : j.at("mae")) {
    r.mae.push_back({m.at("quantity").get<std::string>(), m.at("series").get<std::string>(), real(m.at("mae")),
                     real(m.at("max_abs")), m.at("count").get<std::size_t>()});
  }
  if (j.contains("cost")) {
    const auto& cj = j.at("cost");
    CostRow c;
    c.pipeline = real(cj.at("pipeline"));
    c.tank_material = real(cj.at("tank_material"));
    c.tank_foundation = real(cj.at("tank_foundation"));
    c.pump_npv = real(cj.at("pump_npv"));
    c.total = real(cj.at("total"));
    c.npv_factor = real(cj.at("npv_factor"));
    c.wind_coefficient = real(cj.at("wind_coefficient"));
    for (const auto& t : cj.at("tanks")) {
      c.tanks.push_back({t.at("id").get<std::string>(), real(t.at("water_depth_m")),
                         real(t.at("height_above_ground_m")), real(t.at("volume_m3")), real(t.at("diameter_m")),
                         real(t.at("moment_kNm")), real(t.at("force_kN")), real(t.at("material")),
                         real(t.at("foundation"))});
    }
    for (const auto& p : cj.at("pumps")) {
      c.pumps.push_back({p.at("tank").get<std::string>(), real(p.at("flow_lps")), real(p.at("supply_diameter_mm")),
                         real(p.at("resistance")), real(p.at("geometric_head_m")), real(p.at("total_head_m")),
                         real(p.at("power_kW")), real(p.at("energy_kWh_per_day")), real(p.at("daily_cost")),
                         real(p.at("npv"))});
    }
    r.cost = c;
  }
  if (j.contains("design")) {
    const auto& dj = j.at("design");
    DesignRow d;
    d.feasible = dj.at("feasible").get<bool>();
    d.max_violation = real(dj.at("max_violation_m"));
    d.starts = dj.at("starts").get<int>();
    d.evaluations = dj.at("evaluations").get<int>();
    if (!dj.at("baseline_total").is_null()) d.baseline_total = real(dj.at("baseline_total"));
    if (!dj.at("deltas").is_null()) {
      const auto& x = dj.at("deltas");
      d.deltas = CostDeltas{real(x.at("pipeline")), real(x.at("tank_material")), real(x.at("tank_foundation")),
                            real(x.at("pump_npv")), real(x.at("total"))};
    }
    d.message = dj.at("message").get<std::string>();
    r.design = d;
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

std::string render_table(const Report& r) {
  std::string out;
  auto line = [&](const std::string& s) {
    out += s;
    out += '\n';
  };
  line(fmt::format("{} ({}): {} after {} iterations; mass residual {:.3e} m3/s, energy residual {:.3e} m", r.command,
                   r.model, r.converged ? "converged" : "NOT converged", r.iterations, r.mass_residual,
                   r.energy_residual));
  line("");
  line(fmt::format("{:<8} {:>12} {:>10} {:>12} {:>12} {:>9}", "Pipe", "Q [L/s]", "V [m/s]", "hf [m]", "Re", "f"));
  for (const PipeRow& p : r.pipes) {
    line(fmt::format("{:<8} {:>12.4f} {:>10.4f} {:>12.5f} {:>12.0f} {:>9.5f}", p.id, p.flow, p.velocity, p.headloss,
                     p.reynolds, p.friction));
  }
  line("");
  line(fmt::format("{:<8} {:<9} {:>12} {:>14}", "Node", "Kind", "Head [m]", "Pressure [m]"));
  for (const NodeRow& n : r.nodes) {
    line(fmt::format("{:<8} {:<9} {:>12.4f} {:>14.4f}", n.id, n.tank ? "tank" : "junction", n.head, n.pressure));
  }
  if (!r.mae.empty()) {
    line("");
    line(fmt::format("{:<10} {:<10} {:>10} {:>10} {:>6}", "Quantity", "Series", "MAE", "Max |d|", "n"));
    for (const MaeRow& m : r.mae) {
      line(fmt::format("{:<10} {:<10} {:>10.4f} {:>10.4f} {:>6}", m.quantity, m.series, m.mae, m.max_abs, m.count));
    }
  }
  if (r.cost) {
    const CostRow& c = *r.cost;
    line("");
    line(fmt::format("{:<8} {:>8} {:>8} {:>10} {:>8} {:>11} {:>10} {:>12} {:>12}", "Tank", "h_r [m]", "h_b [m]",
                     "V [m3]", "D [m]", "M [kN m]", "H [kN]", "C_m [USD]", "C_f [USD]"));
    for (const TankRow& t : c.tanks) {
      line(fmt::format("{:<8} {:>8.3f} {:>8.3f} {:>10.2f} {:>8.3f} {:>11.2f} {:>10.2f} {:>12.2f} {:>12.2f}", t.id,
                       t.water_depth, t.height_above_ground, t.volume, t.diameter, t.moment, t.force, t.material,
                       t.foundation));
    }
    line("");
    line(fmt::format("{:<8} {:>10} {:>8} {:>12} {:>8} {:>8} {:>9} {:>11} {:>12}", "Pump", "Q [L/s]", "D [mm]", "k_p",
                     "h_g [m]", "H_p [m]", "P [kW]", "E [kWh/d]", "C_p [USD]"));
    for (const PumpRow& p : c.pumps) {
      line(fmt::format("{:<8} {:>10.3f} {:>8.0f} {:>12.2f} {:>8.2f} {:>8.2f} {:>9.3f} {:>11.2f} {:>12.2f}", p.tank,
                       p.flow, p.supply_diameter, p.resistance, p.geometric_head, p.total_head, p.power, p.energy,
                       p.npv));
    }
    line("");
    line(fmt::format("k_w = {:.2f}, I_NPV = {:.4f} years", c.wind_coefficient, c.npv_factor));
    line(fmt::format("{:<18} {:>16.2f}", "Pipeline", c.pipeline));
    line(fmt::format("{:<18} {:>16.2f}", "Tank material", c.tank_material));
    line(fmt::format("{:<18} {:>16.2f}", "Tank foundation", c.tank_foundation));
    line(fmt::format("{:<18} {:>16.2f}", "Pump energy NPV", c.pump_npv));
    line(fmt::format("{:<18} {:>16.2f}", "Total [USD]", c.total));
  }
  if (r.design) {
    const DesignRow& d = *r.design;
    line("");
    line(fmt::format("Design: {} (max violation {:.2e} m), {} starts, {} evaluations", d.feasible ? "feasible" : "INFEASIBLE",
                     d.max_violation, d.starts, d.evaluations));
    if (!d.message.empty()) line(d.message);
    if (d.baseline_total && d.deltas) {
      auto pct = [](double v) { return std::isnan(v) ? std::string("n/a") : fmt::format("{:.1f}%", 100.0 * v); };
      line(fmt::format("Baseline total {:.2f} USD; reduction: pipeline {}, material {}, foundation {}, pump {}, total {}",
                       *d.baseline_total, pct(d.deltas->pipeline), pct(d.deltas->tank_material),
                       pct(d.deltas->tank_foundation), pct(d.deltas->pump_npv), pct(d.deltas->total)));
    }
  }
  for (const std::string& w : r.warnings) line("warning: " + w);
  return out;
}

}  // namespace wdn
