#include "ccepec/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace fs = std::filesystem;

namespace ccepec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInfD = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Shortest decimal string that parses back to the same double. Ramps may be
// infinite; those are serialized as empty fields.
std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV ingestion

struct Csv {
  std::string file;  // basename, for error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> lineno;  // source line per row
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

Csv read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  Csv csv;
  csv.file = path.filename().string();
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (csv.header.empty()) {
      csv.header = fields;
      continue;
    }
    if (fields.size() != csv.header.size())
      fail(csv.file + " line " + std::to_string(no) + ": expected " +
           std::to_string(csv.header.size()) + " fields, got " +
           std::to_string(fields.size()));
    csv.rows.push_back(std::move(fields));
    csv.lineno.push_back(no);
  }
  if (csv.header.empty()) fail(path.string() + " is empty");
  return csv;
}

int find_col(const Csv& csv, const std::string& name, bool required = true) {
  for (size_t j = 0; j < csv.header.size(); ++j)
    if (csv.header[j] == name) return static_cast<int>(j);
  if (required) fail(csv.file + ": missing column '" + name + "'");
  return -1;
}

const std::string& cell(const Csv& csv, size_t row, int col) {
  return csv.rows[row][static_cast<size_t>(col)];
}

double parse_num(const Csv& csv, size_t row, int col) {
  const std::string& s = cell(csv, row, col);
  const char* p = s.c_str();
  char* end = nullptr;
  double v = std::strtod(p, &end);
  if (end == p || *end != '\0')
    fail(csv.file + " line " + std::to_string(csv.lineno[row]) + ": field '" +
         csv.header[static_cast<size_t>(col)] + "' is not a number: '" + s + "'");
  return v;
}

// Empty cell (or absent column) falls back to a caller-supplied default.
double parse_num_opt(const Csv& csv, size_t row, int col, double dflt) {
  if (col < 0 || cell(csv, row, col).empty()) return dflt;
  return parse_num(csv, row, col);
}

int parse_int(const Csv& csv, size_t row, int col) {
  double v = parse_num(csv, row, col);
  if (v != std::floor(v) || std::abs(v) > 1e9)
    fail(csv.file + " line " + std::to_string(csv.lineno[row]) + ": field '" +
         csv.header[static_cast<size_t>(col)] + "' is not an integer: '" +
         cell(csv, row, col) + "'");
  return static_cast<int>(v);
}

GenKind parse_kind(const Csv& csv, size_t row, int col) {
  const std::string& s = cell(csv, row, col);
  if (s == "controllable") return GenKind::Controllable;
  if (s == "renewable") return GenKind::Renewable;
  fail(csv.file + " line " + std::to_string(csv.lineno[row]) +
       ": kind must be 'controllable' or 'renewable', got '" + s + "'");
}

// Columns shared by generators.csv and candidates.csv.
void parse_unit_fields(const Csv& csv, size_t r, Generator& g) {
  g.id = cell(csv, r, find_col(csv, "id"));
  g.node = cell(csv, r, find_col(csv, "node"));
  g.kind = parse_kind(csv, r, find_col(csv, "kind"));
  g.fuel = cell(csv, r, find_col(csv, "fuel"));
  g.g_min = parse_num(csv, r, find_col(csv, "g_min_mw"));
  g.g_max = parse_num(csv, r, find_col(csv, "g_max_mw"));
  g.ramp_down = parse_num_opt(csv, r, find_col(csv, "ramp_down_mw"), -kInfD);
  g.ramp_up = parse_num_opt(csv, r, find_col(csv, "ramp_up_mw"), kInfD);
  g.cost = parse_num(csv, r, find_col(csv, "cost_usd_per_mwh"));
  g.alpha = parse_num_opt(csv, r, find_col(csv, "alpha", false), kNaN);
  g.sigma = parse_num_opt(csv, r, find_col(csv, "sigma", false), 0.0);
  g.upsilon = parse_num_opt(csv, r, find_col(csv, "upsilon", false), 0.0);
  g.reserve = parse_num_opt(csv, r, find_col(csv, "reserve_mw", false), 0.0);
}

// Demand and forecast rows reference nodes/units/days by name; they are
// assembled into dense arrays only after those tables are known.
struct SeriesEntry {
  std::string key;  // node or generator id
  std::string day;
  int hour = 0;
  double value = 0.0;
  std::string where;  // "file line N" for error messages
};

// ---------------------------------------------------------------------------
// Assembly and validation shared by the CSV and JSON loaders

void assemble_demand(GridModel& grid, const std::vector<SeriesEntry>& entries) {
  const size_t n_nodes = grid.nodes.size();
  const size_t days = grid.rep_days.size();
  grid.demand.assign(n_nodes * days * static_cast<size_t>(grid.hours), kNaN);
  std::unordered_map<std::string, int> day_idx;
  for (size_t e = 0; e < days; ++e) day_idx[grid.rep_days[e].id] = static_cast<int>(e);
  for (const auto& en : entries) {
    int n = grid.node_index(en.key);
    if (n < 0) fail(en.where + ": unknown node '" + en.key + "'");
    auto it = day_idx.find(en.day);
    if (it == day_idx.end()) fail(en.where + ": unknown day '" + en.day + "'");
    if (en.hour < 0 || en.hour >= grid.hours)
      fail(en.where + ": hour " + std::to_string(en.hour) + " outside 0.." +
           std::to_string(grid.hours - 1));
    size_t idx = (static_cast<size_t>(it->second) * grid.hours + en.hour) * n_nodes +
                 static_cast<size_t>(n);
    if (!std::isnan(grid.demand[idx]))
      fail(en.where + ": duplicate demand entry for node '" + en.key + "'");
    grid.demand[idx] = en.value;
  }
  for (size_t e = 0; e < days; ++e)
    for (int t = 0; t < grid.hours; ++t)
      for (size_t n = 0; n < n_nodes; ++n)
        if (std::isnan(grid.demand[(e * grid.hours + t) * n_nodes + n]))
          fail("demand: no entry for node '" + grid.nodes[n].id + "', day '" +
               grid.rep_days[e].id + "', hour " + std::to_string(t));
}

void assemble_forecast(GridModel& grid, const std::vector<SeriesEntry>& entries) {
  const size_t days = grid.rep_days.size();
  std::unordered_map<std::string, Generator*> units;
  for (auto& g : grid.existing_gens) units[g.id] = &g;
  for (auto& g : grid.candidate_gens) units[g.id] = &g;
  std::unordered_map<std::string, int> day_idx;
  for (size_t e = 0; e < days; ++e) day_idx[grid.rep_days[e].id] = static_cast<int>(e);
  for (const auto& en : entries) {
    auto it = units.find(en.key);
    if (it == units.end()) fail(en.where + ": unknown generator '" + en.key + "'");
    auto dit = day_idx.find(en.day);
    if (dit == day_idx.end()) fail(en.where + ": unknown day '" + en.day + "'");
    if (en.hour < 0 || en.hour >= grid.hours)
      fail(en.where + ": hour " + std::to_string(en.hour) + " outside 0.." +
           std::to_string(grid.hours - 1));
    Generator& g = *it->second;
    if (g.availability.empty())
      g.availability.assign(days * static_cast<size_t>(grid.hours), kNaN);
    double& slot = g.availability[static_cast<size_t>(dit->second) * grid.hours + en.hour];
    if (!std::isnan(slot))
      fail(en.where + ": duplicate forecast entry for generator '" + en.key + "'");
    slot = en.value;
  }
  for (const auto& [id, g] : units) {
    if (g->availability.empty()) continue;
    for (size_t k = 0; k < g->availability.size(); ++k)
      if (std::isnan(g->availability[k]))
        fail("forecast: generator '" + id + "' has a partial availability series "
             "(fill every day and hour, or none)");
  }
}

// Controllable units with no explicit participation factor split the recourse
// evenly within their state; renewables and candidates default to zero.
void fill_default_alpha(GridModel& grid) {
  std::unordered_map<std::string, int> count;
  for (const auto& g : grid.existing_gens)
    if (g.kind == GenKind::Controllable) {
      int n = grid.node_index(g.node);
      if (n >= 0) ++count[grid.nodes[n].state];
    }
  auto fill = [&](Generator& g, bool existing) {
    if (!std::isnan(g.alpha)) return;
    if (existing && g.kind == GenKind::Controllable) {
      int n = grid.node_index(g.node);
      int c = n >= 0 ? count[grid.nodes[n].state] : 0;
      g.alpha = c > 0 ? 1.0 / c : 0.0;
    } else {
      g.alpha = 0.0;
    }
  };
  for (auto& g : grid.existing_gens) fill(g, true);
  for (auto& g : grid.candidate_gens) fill(g, false);
}

void check_unit(const GridModel& grid, const Generator& g,
                std::unordered_set<std::string>& ids) {
  if (g.id.empty()) fail("generator with empty id");
  if (!ids.insert(g.id).second) fail("duplicate generator id '" + g.id + "'");
  if (grid.node_index(g.node) < 0)
    fail("generator '" + g.id + "' references unknown node '" + g.node + "'");
  if (g.g_min < 0 || g.g_max < 0 || g.g_min > g.g_max)
    fail("generator '" + g.id + "' needs 0 <= g_min <= g_max, got [" +
         csv_num(g.g_min) + ", " + csv_num(g.g_max) + "]");
  if (g.ramp_down > 0 || g.ramp_up < 0)
    fail("generator '" + g.id + "' needs ramp_down <= 0 <= ramp_up");
  if (!std::isfinite(g.cost)) fail("generator '" + g.id + "' has non-finite cost");
  if (g.alpha < 0 || g.alpha > 1)
    fail("generator '" + g.id + "' has participation factor outside [0, 1]");
  if (g.sigma < 0) fail("generator '" + g.id + "' has negative sigma");
  if (g.reserve < 0) fail("generator '" + g.id + "' has negative reserve");
  if (g.kind == GenKind::Renewable && g.alpha != 0)
    fail("renewable '" + g.id + "' cannot carry a participation factor");
  if (g.kind == GenKind::Controllable && (g.sigma != 0 || g.upsilon != 0))
    fail("controllable '" + g.id + "' cannot carry forecast error statistics");
  for (double a : g.availability)
    if (a < -1e-12 || a > 1 + 1e-12)
      fail("generator '" + g.id + "' has availability outside [0, 1]");
}

void validate_grid(GridModel& grid) {
  if (grid.nodes.empty()) fail("grid has no nodes");
  std::unordered_set<std::string> node_ids;
  for (const auto& n : grid.nodes) {
    if (n.id.empty()) fail("node with empty id");
    if (n.state.empty()) fail("node '" + n.id + "' has empty state");
    if (!node_ids.insert(n.id).second) fail("duplicate node id '" + n.id + "'");
  }
  grid.states.clear();
  for (const auto& n : grid.nodes)
    if (std::find(grid.states.begin(), grid.states.end(), n.state) == grid.states.end())
      grid.states.push_back(n.state);

  std::unordered_set<std::string> line_ids;
  for (const auto& l : grid.lines) {
    if (!line_ids.insert(l.id).second) fail("duplicate line id '" + l.id + "'");
    if (grid.node_index(l.from) < 0)
      fail("line '" + l.id + "' references unknown node '" + l.from + "'");
    if (grid.node_index(l.to) < 0)
      fail("line '" + l.id + "' references unknown node '" + l.to + "'");
    if (l.from == l.to) fail("line '" + l.id + "' connects a node to itself");
    if (!(l.reactance > 0)) fail("line '" + l.id + "' needs positive reactance");
    if (l.capacity < 0) fail("line '" + l.id + "' has negative capacity");
  }

  std::unordered_set<std::string> unit_ids;
  for (const auto& g : grid.existing_gens) check_unit(grid, g, unit_ids);
  for (const auto& g : grid.candidate_gens) {
    check_unit(grid, g, unit_ids);
    if (g.capital_cost < 0) fail("candidate '" + g.id + "' has negative capital cost");
    if (g.min_output_factor < 0 || g.min_output_factor > 1)
      fail("candidate '" + g.id + "' has min output factor outside [0, 1]");
  }
  for (const auto& id : grid.retired)
    if (unit_ids.count(id))
      fail("unit '" + id + "' is listed as retired but still present");

  if (grid.rep_days.empty()) fail("grid has no representative days");
  std::unordered_set<std::string> day_ids;
  double wsum = 0.0;
  for (const auto& d : grid.rep_days) {
    if (!day_ids.insert(d.id).second) fail("duplicate day id '" + d.id + "'");
    if (d.weight < 0) fail("day '" + d.id + "' has negative weight");
    wsum += d.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    fail("representative day weights sum to " + csv_num(wsum) + ", expected 1");

  if (grid.hours < 1) fail("grid needs at least one hour per day");
  size_t want = grid.nodes.size() * grid.rep_days.size() * static_cast<size_t>(grid.hours);
  if (grid.demand.size() != want)
    fail("demand table has " + std::to_string(grid.demand.size()) +
         " entries, expected " + std::to_string(want));
  for (double d : grid.demand)
    if (!(d >= 0)) fail("demand contains a negative or missing value");
  for (const auto& g : grid.existing_gens)
    if (!g.availability.empty() && g.availability.size() != grid.rep_days.size() * static_cast<size_t>(grid.hours))
      fail("generator '" + g.id + "' availability series has the wrong length");
  for (const auto& g : grid.candidate_gens)
    if (!g.availability.empty() && g.availability.size() != grid.rep_days.size() * static_cast<size_t>(grid.hours))
      fail("generator '" + g.id + "' availability series has the wrong length");
}

// ---------------------------------------------------------------------------
// Directory-of-CSVs loader

GridModel load_grid_csv(const fs::path& dir) {
  GridModel grid;

  Csv nodes = read_csv(dir / "nodes.csv");
  int c_node = find_col(nodes, "node"), c_state = find_col(nodes, "state");
  for (size_t r = 0; r < nodes.rows.size(); ++r)
    grid.nodes.push_back({cell(nodes, r, c_node), cell(nodes, r, c_state)});

  Csv lines = read_csv(dir / "lines.csv");
  int c_line = find_col(lines, "line"), c_from = find_col(lines, "from"),
      c_to = find_col(lines, "to"), c_x = find_col(lines, "reactance_ohm"),
      c_cap = find_col(lines, "capacity_mw");
  for (size_t r = 0; r < lines.rows.size(); ++r) {
    Line l;
    l.id = cell(lines, r, c_line);
    l.from = cell(lines, r, c_from);
    l.to = cell(lines, r, c_to);
    l.reactance = parse_num(lines, r, c_x);
    l.capacity = parse_num(lines, r, c_cap);
    grid.lines.push_back(std::move(l));
  }

  Csv gens = read_csv(dir / "generators.csv");
  for (size_t r = 0; r < gens.rows.size(); ++r) {
    Generator g;
    parse_unit_fields(gens, r, g);
    grid.existing_gens.push_back(std::move(g));
  }

  Csv cands = read_csv(dir / "candidates.csv");
  int c_inv = find_col(cands, "capital_cost_usd_per_mw");
  int c_gamma = find_col(cands, "min_output_factor");
  for (size_t r = 0; r < cands.rows.size(); ++r) {
    CandidateGenerator g;
    parse_unit_fields(cands, r, g);
    g.capital_cost = parse_num(cands, r, c_inv);
    g.min_output_factor = parse_num(cands, r, c_gamma);
    grid.candidate_gens.push_back(std::move(g));
  }

  Csv days = read_csv(dir / "repdays.csv");
  int c_day = find_col(days, "day"), c_w = find_col(days, "weight");
  for (size_t r = 0; r < days.rows.size(); ++r)
    grid.rep_days.push_back({cell(days, r, c_day), parse_num(days, r, c_w)});

  Csv dem = read_csv(dir / "demand.csv");
  int d_node = find_col(dem, "node"), d_day = find_col(dem, "day"),
      d_hour = find_col(dem, "hour"), d_mw = find_col(dem, "demand_mw");
  std::vector<SeriesEntry> demand_rows;
  int max_hour = -1;
  for (size_t r = 0; r < dem.rows.size(); ++r) {
    SeriesEntry en;
    en.key = cell(dem, r, d_node);
    en.day = cell(dem, r, d_day);
    en.hour = parse_int(dem, r, d_hour);
    en.value = parse_num(dem, r, d_mw);
    en.where = dem.file + " line " + std::to_string(dem.lineno[r]);
    max_hour = std::max(max_hour, en.hour);
    demand_rows.push_back(std::move(en));
  }
  grid.hours = max_hour + 1;

  std::vector<SeriesEntry> forecast_rows;
  fs::path fpath = dir / "forecast.csv";
  if (fs::exists(fpath)) {
    Csv fc = read_csv(fpath);
    int f_gen = find_col(fc, "gen"), f_day = find_col(fc, "day"),
        f_hour = find_col(fc, "hour"), f_val = find_col(fc, "factor");
    for (size_t r = 0; r < fc.rows.size(); ++r) {
      SeriesEntry en;
      en.key = cell(fc, r, f_gen);
      en.day = cell(fc, r, f_day);
      en.hour = parse_int(fc, r, f_hour);
      en.value = parse_num(fc, r, f_val);
      en.where = fc.file + " line " + std::to_string(fc.lineno[r]);
      forecast_rows.push_back(std::move(en));
    }
  }

  fs::path rpath = dir / "retired.csv";
  if (fs::exists(rpath)) {
    Csv ret = read_csv(rpath);
    int r_id = find_col(ret, "id");
    for (size_t r = 0; r < ret.rows.size(); ++r)
      grid.retired.push_back(cell(ret, r, r_id));
    std::sort(grid.retired.begin(), grid.retired.end());
  }

  // States must exist before demand/forecast assembly resolves node names.
  grid.states.clear();
  for (const auto& n : grid.nodes)
    if (std::find(grid.states.begin(), grid.states.end(), n.state) == grid.states.end())
      grid.states.push_back(n.state);
  assemble_demand(grid, demand_rows);
  assemble_forecast(grid, forecast_rows);
  fill_default_alpha(grid);
  validate_grid(grid);
  return grid;
}

// ---------------------------------------------------------------------------
// Single-document JSON loader (same content, one file)

using Json = nlohmann::ordered_json;

double jnum(const Json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) fail(ctx + ": missing field '" + key + "'");
  if (!obj[key].is_number()) fail(ctx + ": field '" + key + "' is not a number");
  return obj[key].get<double>();
}

double jnum_opt(const Json& obj, const std::string& key, double dflt) {
  if (!obj.contains(key) || obj[key].is_null()) return dflt;
  return obj[key].get<double>();
}

std::string jstr(const Json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key) || !obj[key].is_string())
    fail(ctx + ": missing string field '" + key + "'");
  return obj[key].get<std::string>();
}

void junit_fields(const Json& o, const std::string& ctx, Generator& g) {
  g.id = jstr(o, "id", ctx);
  g.node = jstr(o, "node", ctx);
  std::string kind = jstr(o, "kind", ctx);
  if (kind == "controllable") {
    g.kind = GenKind::Controllable;
  } else if (kind == "renewable") {
    g.kind = GenKind::Renewable;
  } else {
    fail(ctx + ": kind must be 'controllable' or 'renewable', got '" + kind + "'");
  }
  g.fuel = o.contains("fuel") ? o["fuel"].get<std::string>() : "";
  g.g_min = jnum(o, "g_min_mw", ctx);
  g.g_max = jnum(o, "g_max_mw", ctx);
  g.ramp_down = jnum_opt(o, "ramp_down_mw", -kInfD);
  g.ramp_up = jnum_opt(o, "ramp_up_mw", kInfD);
  g.cost = jnum(o, "cost_usd_per_mwh", ctx);
  g.alpha = jnum_opt(o, "alpha", kNaN);
  g.sigma = jnum_opt(o, "sigma", 0.0);
  g.upsilon = jnum_opt(o, "upsilon", 0.0);
  g.reserve = jnum_opt(o, "reserve_mw", 0.0);
}

GridModel load_grid_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    fail(path.string() + ": " + e.what());
  }
  GridModel grid;
  std::string ctx = path.filename().string();
  for (const auto& o : doc.value("nodes", Json::array()))
    grid.nodes.push_back({jstr(o, "id", ctx), jstr(o, "state", ctx)});
  for (const auto& o : doc.value("lines", Json::array())) {
    Line l;
    l.id = jstr(o, "id", ctx);
    l.from = jstr(o, "from", ctx);
    l.to = jstr(o, "to", ctx);
    l.reactance = jnum(o, "reactance_ohm", ctx);
    l.capacity = jnum(o, "capacity_mw", ctx);
    grid.lines.push_back(std::move(l));
  }
  for (const auto& o : doc.value("generators", Json::array())) {
    Generator g;
    junit_fields(o, ctx, g);
    grid.existing_gens.push_back(std::move(g));
  }
  for (const auto& o : doc.value("candidates", Json::array())) {
    CandidateGenerator g;
    junit_fields(o, ctx, g);
    g.capital_cost = jnum(o, "capital_cost_usd_per_mw", ctx);
    g.min_output_factor = jnum(o, "min_output_factor", ctx);
    grid.candidate_gens.push_back(std::move(g));
  }
  for (const auto& o : doc.value("repdays", Json::array()))
    grid.rep_days.push_back({jstr(o, "id", ctx), jnum(o, "weight", ctx)});
  for (const auto& id : doc.value("retired", Json::array()))
    grid.retired.push_back(id.get<std::string>());
  std::sort(grid.retired.begin(), grid.retired.end());

  std::vector<SeriesEntry> demand_rows, forecast_rows;
  int max_hour = -1;
  for (const auto& o : doc.value("demand", Json::array())) {
    SeriesEntry en;
    en.key = jstr(o, "node", ctx);
    en.day = jstr(o, "day", ctx);
    en.hour = static_cast<int>(jnum(o, "hour", ctx));
    en.value = jnum(o, "mw", ctx);
    en.where = ctx + " demand entry";
    max_hour = std::max(max_hour, en.hour);
    demand_rows.push_back(std::move(en));
  }
  grid.hours = doc.contains("hours") ? static_cast<int>(jnum(doc, "hours", ctx))
                                     : max_hour + 1;
  for (const auto& o : doc.value("forecast", Json::array())) {
    SeriesEntry en;
    en.key = jstr(o, "gen", ctx);
    en.day = jstr(o, "day", ctx);
    en.hour = static_cast<int>(jnum(o, "hour", ctx));
    en.value = jnum(o, "factor", ctx);
    en.where = ctx + " forecast entry";
    forecast_rows.push_back(std::move(en));
  }

  grid.states.clear();
  for (const auto& n : grid.nodes)
    if (std::find(grid.states.begin(), grid.states.end(), n.state) == grid.states.end())
      grid.states.push_back(n.state);
  assemble_demand(grid, demand_rows);
  assemble_forecast(grid, forecast_rows);
  fill_default_alpha(grid);
  validate_grid(grid);
  return grid;
}

void write_unit_row(std::ofstream& out, const Generator& g) {
  out << g.id << ',' << g.node << ','
      << (g.kind == GenKind::Controllable ? "controllable" : "renewable") << ','
      << g.fuel << ',' << csv_num(g.g_min) << ',' << csv_num(g.g_max) << ','
      << (std::isinf(g.ramp_down) ? std::string() : csv_num(g.ramp_down)) << ','
      << (std::isinf(g.ramp_up) ? std::string() : csv_num(g.ramp_up)) << ','
      << csv_num(g.cost) << ',' << csv_num(g.alpha) << ',' << csv_num(g.sigma)
      << ',' << csv_num(g.upsilon) << ',' << csv_num(g.reserve);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write " + path.string());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// GridModel accessors

int GridModel::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

int GridModel::state_index(const std::string& id) const {
  for (size_t i = 0; i < states.size(); ++i)
    if (states[i] == id) return static_cast<int>(i);
  return -1;
}

double GridModel::demand_at(int node, int t, int e) const {
  return demand[(static_cast<size_t>(e) * hours + t) * nodes.size() +
                static_cast<size_t>(node)];
}

double GridModel::forecast_factor(const Generator& g, int t, int e) const {
  if (g.availability.empty()) return 1.0;
  return g.availability[static_cast<size_t>(e) * hours + t];
}

std::vector<int> GridModel::nodes_of_state(const std::string& state) const {
  std::vector<int> out;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].state == state) out.push_back(static_cast<int>(i));
  return out;
}

const ActorPolicy* PolicySet::find(const std::string& state) const {
  for (const auto& a : actors)
    if (a.state == state) return &a;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Public entry points

GridModel load_grid(const std::string& path) {
  fs::path p(path);
  if (fs::is_directory(p)) return load_grid_csv(p);
  if (!fs::exists(p)) fail("cannot open " + path);
  return load_grid_json(p);
}

void save_grid(const GridModel& grid, const std::string& dir) {
  fs::path d(dir);
  fs::create_directories(d);

  auto out = open_out(d / "nodes.csv");
  out << "node,state\n";
  for (const auto& n : grid.nodes) out << n.id << ',' << n.state << '\n';

  out = open_out(d / "lines.csv");
  out << "line,from,to,reactance_ohm,capacity_mw\n";
  for (const auto& l : grid.lines)
    out << l.id << ',' << l.from << ',' << l.to << ',' << csv_num(l.reactance)
        << ',' << csv_num(l.capacity) << '\n';

  out = open_out(d / "generators.csv");
  out << "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,ramp_up_mw,"
         "cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw\n";
  for (const auto& g : grid.existing_gens) {
    write_unit_row(out, g);
    out << '\n';
  }

  out = open_out(d / "candidates.csv");
  out << "id,node,kind,fuel,g_min_mw,g_max_mw,ramp_down_mw,ramp_up_mw,"
         "cost_usd_per_mwh,alpha,sigma,upsilon,reserve_mw,"
         "capital_cost_usd_per_mw,min_output_factor\n";
  for (const auto& g : grid.candidate_gens) {
    write_unit_row(out, g);
    out << ',' << csv_num(g.capital_cost) << ',' << csv_num(g.min_output_factor)
        << '\n';
  }

  out = open_out(d / "repdays.csv");
  out << "day,weight\n";
  for (const auto& day : grid.rep_days)
    out << day.id << ',' << csv_num(day.weight) << '\n';

  out = open_out(d / "demand.csv");
  out << "node,day,hour,demand_mw\n";
  for (size_t e = 0; e < grid.rep_days.size(); ++e)
    for (int t = 0; t < grid.hours; ++t)
      for (size_t n = 0; n < grid.nodes.size(); ++n)
        out << grid.nodes[n].id << ',' << grid.rep_days[e].id << ',' << t << ','
            << csv_num(grid.demand_at(static_cast<int>(n), t, static_cast<int>(e)))
            << '\n';

  out = open_out(d / "forecast.csv");
  out << "gen,day,hour,factor\n";
  auto dump_series = [&](const Generator& g) {
    if (g.availability.empty()) return;
    for (size_t e = 0; e < grid.rep_days.size(); ++e)
      for (int t = 0; t < grid.hours; ++t)
        out << g.id << ',' << grid.rep_days[e].id << ',' << t << ','
            << csv_num(g.availability[e * grid.hours + t]) << '\n';
  };
  for (const auto& g : grid.existing_gens) dump_series(g);
  for (const auto& g : grid.candidate_gens) dump_series(g);

  if (!grid.retired.empty()) {
    out = open_out(d / "retired.csv");
    out << "id\n";
    for (const auto& id : grid.retired) out << id << '\n';
  }
}

bool grids_equal(const GridModel& a, const GridModel& b) {
  auto unit_eq = [](const Generator& x, const Generator& y) {
    return x.id == y.id && x.node == y.node && x.kind == y.kind &&
           x.fuel == y.fuel && x.g_min == y.g_min && x.g_max == y.g_max &&
           x.ramp_down == y.ramp_down && x.ramp_up == y.ramp_up &&
           x.cost == y.cost && x.alpha == y.alpha && x.sigma == y.sigma &&
           x.upsilon == y.upsilon && x.reserve == y.reserve &&
           x.availability == y.availability;
  };
  if (a.nodes.size() != b.nodes.size() || a.lines.size() != b.lines.size() ||
      a.existing_gens.size() != b.existing_gens.size() ||
      a.candidate_gens.size() != b.candidate_gens.size() ||
      a.rep_days.size() != b.rep_days.size() || a.hours != b.hours ||
      a.states != b.states || a.retired != b.retired || a.demand != b.demand)
    return false;
  for (size_t i = 0; i < a.nodes.size(); ++i)
    if (a.nodes[i].id != b.nodes[i].id || a.nodes[i].state != b.nodes[i].state)
      return false;
  for (size_t i = 0; i < a.lines.size(); ++i) {
    const Line &x = a.lines[i], &y = b.lines[i];
    if (x.id != y.id || x.from != y.from || x.to != y.to ||
        x.reactance != y.reactance || x.capacity != y.capacity)
      return false;
  }
  for (size_t i = 0; i < a.existing_gens.size(); ++i)
    if (!unit_eq(a.existing_gens[i], b.existing_gens[i])) return false;
  for (size_t i = 0; i < a.candidate_gens.size(); ++i) {
    const CandidateGenerator &x = a.candidate_gens[i], &y = b.candidate_gens[i];
    if (!unit_eq(x, y) || x.capital_cost != y.capital_cost ||
        x.min_output_factor != y.min_output_factor)
      return false;
  }
  return true;
}

PolicySet load_policies(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    fail(path + ": " + e.what());
  }
  PolicySet ps;
  ps.horizon_years = jnum_opt(doc, "horizon_years", 10.0);
  ps.discount_rate = jnum_opt(doc, "discount_rate", 0.05);
  if (ps.horizon_years < 1) fail(path + ": horizon_years must be at least 1");
  if (ps.discount_rate < 0) fail(path + ": discount_rate must be nonnegative");

  if (!doc.contains("actors") || !doc["actors"].is_object())
    fail(path + ": missing 'actors' object");
  for (const auto& [state, o] : doc["actors"].items()) {
    ActorPolicy a;
    a.state = state;
    std::string ctx = path + " actor '" + state + "'";
    a.rps_fraction = jnum_opt(o, "rps_fraction", 0.0);
    // a missing budget means "unbudgeted": the planner emits no budget row
    a.capital_budget = jnum_opt(o, "capital_budget", kInfD);
    a.policy_budget = jnum_opt(o, "policy_budget", kInfD);
    a.energy_tariff = jnum_opt(o, "energy_tariff", 0.0);
    a.capacity_tariff = jnum_opt(o, "capacity_tariff", 0.0);
    a.retail_price = jnum_opt(o, "retail_price", 0.0);
    a.interface_limit = jnum_opt(o, "interface_limit", 0.0);
    a.eta = jnum_opt(o, "eta", 0.03);
    if (a.rps_fraction < 0 || a.rps_fraction > 1)
      fail(ctx + ": rps_fraction outside [0, 1]");
    for (double v : {a.capital_budget, a.policy_budget, a.energy_tariff,
                     a.capacity_tariff, a.retail_price, a.interface_limit})
      if (v < 0) fail(ctx + ": monetary and limit fields must be nonnegative");
    if (!(a.eta > 0 && a.eta < 0.5))
      fail(ctx + ": eta must lie strictly between 0 and 0.5");
    ps.actors.push_back(std::move(a));
  }

  if (doc.contains("retirements")) {
    for (const auto& [name, o] : doc["retirements"].items()) {
      PolicySet::Retirement r;
      r.name = name;
      if (o.is_array()) {
        for (const auto& id : o) r.ids.push_back(id.get<std::string>());
      } else if (o.is_object()) {
        for (const auto& id : o.value("ids", Json::array()))
          r.ids.push_back(id.get<std::string>());
        for (const auto& f : o.value("fuels", Json::array()))
          r.fuels.push_back(f.get<std::string>());
      } else {
        fail(path + ": retirement '" + name + "' must be an array or object");
      }
      ps.retirements.push_back(std::move(r));
    }
  }
  return ps;
}

RetirementScenario resolve_retirement(const GridModel& grid,
                                      const PolicySet& policies,
                                      const std::string& name) {
  const PolicySet::Retirement* recipe = nullptr;
  for (const auto& r : policies.retirements)
    if (r.name == name) recipe = &r;
  if (!recipe) {
    std::string known;
    for (const auto& r : policies.retirements)
      known += (known.empty() ? "" : ", ") + r.name;
    fail("unknown retirement scenario '" + name + "'; policy file defines: " +
         (known.empty() ? "(none)" : known));
  }
  std::set<std::string> ids(recipe->ids.begin(), recipe->ids.end());
  auto sweep = [&](const Generator& g) {
    for (const auto& f : recipe->fuels)
      if (g.fuel == f) ids.insert(g.id);
  };
  for (const auto& g : grid.existing_gens) sweep(g);
  for (const auto& g : grid.candidate_gens) sweep(g);
  RetirementScenario sc;
  sc.name = name;
  sc.removed.assign(ids.begin(), ids.end());
  return sc;
}

GridModel apply_retirement(const GridModel& grid,
                           const RetirementScenario& scenario) {
  std::unordered_set<std::string> current;
  for (const auto& g : grid.existing_gens) current.insert(g.id);
  for (const auto& g : grid.candidate_gens) current.insert(g.id);
  std::unordered_set<std::string> already(grid.retired.begin(), grid.retired.end());
  for (const auto& id : scenario.removed)
    if (!current.count(id) && !already.count(id))
      fail("retirement scenario '" + scenario.name +
           "' references unknown generator '" + id + "'");

  GridModel out = grid;
  std::unordered_set<std::string> drop(scenario.removed.begin(),
                                       scenario.removed.end());
  std::erase_if(out.existing_gens,
                [&](const Generator& g) { return drop.count(g.id) > 0; });
  std::erase_if(out.candidate_gens,
                [&](const CandidateGenerator& g) { return drop.count(g.id) > 0; });
  for (const auto& id : scenario.removed)
    if (!already.count(id)) out.retired.push_back(id);
  std::sort(out.retired.begin(), out.retired.end());
  return out;
}

double prorate_capital_cost(double cost_per_mw, int years, double rate) {
  if (years < 1)
    throw std::invalid_argument("cost recovery period must be at least one year");
  if (rate < 0)
    throw std::invalid_argument("discount rate must be nonnegative");
  if (rate == 0) return cost_per_mw / years / 365.0;
  double crf = rate / (1.0 - std::pow(1.0 + rate, -years));
  return cost_per_mw * crf / 365.0;
}

}  // namespace ccepec
