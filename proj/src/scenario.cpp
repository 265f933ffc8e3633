#include "mjls/scenario.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mjls {

using nlohmann::json;

namespace {

// Maps JSON pointers to the line where their value starts. Only run on text
// nlohmann already accepted, so it skips rather than validates.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : text_(text) {
    skip_ws();
    value("");
  }

  int line_of(const std::string& pointer) const {
    std::string p = pointer;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      const auto cut = p.rfind('/');
      if (cut == std::string::npos) return 1;
      p.resize(cut);
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\') ++pos_;
      if (pos_ < text_.size()) out += text_[pos_++];
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void value(const std::string& pointer) {
    lines_[pointer] = line_;
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(pointer + "/" + escape(key));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (int i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
        value(pointer + "/" + std::to_string(i));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else {
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != '}')
        ++pos_;
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  explicit Reader(const std::string& text) : index_(text) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw ScenarioError("line " + std::to_string(index_.line_of(pointer)) + " (" +
                        (pointer.empty() ? "/" : pointer) + "): " + message);
  }

  const json& require(const json& obj, const std::string& pointer, const char* key) const {
    if (!obj.contains(key)) fail(pointer, std::string("missing field \"") + key + "\"");
    return obj.at(key);
  }

  void only_keys(const json& obj, const std::string& pointer, std::set<std::string> allowed) const {
    if (!obj.is_object()) fail(pointer, "expected an object");
    for (const auto& [key, _] : obj.items())
      if (!allowed.count(key)) fail(pointer + "/" + key, "unknown field \"" + key + "\"");
  }

  double number(const json& v, const std::string& pointer) const {
    if (!v.is_number()) fail(pointer, "expected a number");
    return v.get<double>();
  }

  double probability(const json& v, const std::string& pointer) const {
    const double p = number(v, pointer);
    if (!(p >= 0.0 && p <= 1.0)) fail(pointer, "probability outside [0, 1]");
    return p;
  }

  long long integer(const json& v, const std::string& pointer, long long min) const {
    if (!v.is_number_integer()) fail(pointer, "expected an integer");
    const long long out = v.get<long long>();
    if (out < min) fail(pointer, "must be at least " + std::to_string(min));
    return out;
  }

  Matrix matrix(const json& v, const std::string& pointer) const {
    if (!v.is_array() || v.empty()) fail(pointer, "expected a non-empty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) fail(pointer + "/0", "expected a non-empty row");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
      const std::string row_ptr = pointer + "/" + std::to_string(r);
      if (!v[r].is_array() || v[r].size() != cols)
        fail(row_ptr, "row length differs from the first row");
      for (std::size_t c = 0; c < cols; ++c)
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            number(v[r][c], row_ptr + "/" + std::to_string(c));
    }
    return out;
  }

  Vector vector(const json& v, const std::string& pointer) const {
    if (!v.is_array() || v.empty()) fail(pointer, "expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k)
      out(static_cast<Eigen::Index>(k)) = number(v[k], pointer + "/" + std::to_string(k));
    return out;
  }

 private:
  LineIndex index_;
};

// Point a model DimensionError at the field it names.
std::string dimension_error_pointer(const std::string& msg) {
  static const std::regex mode_field(R"(^mode (\d+): (A|B|C|D|D1) is)");
  std::smatch m;
  if (std::regex_search(msg, m, mode_field))
    return "/model/modes/" + std::to_string(std::stoi(m[1]) - 1) + "/" + m[2].str();
  if (msg.rfind("transition", 0) == 0) return "/model/transition";
  if (msg.rfind("channel bank", 0) == 0) return "/model/channels";
  if (msg.rfind("terminal", 0) == 0) return "/model/terminal_weight";
  return "/model";
}

MjlsModel read_model(const Reader& rd, const json& m) {
  rd.only_keys(m, "/model", {"modes", "transition", "channels", "terminal_weight"});
  const json& modes = rd.require(m, "/model", "modes");
  if (!modes.is_array() || modes.empty()) rd.fail("/model/modes", "expected a non-empty array");
  std::vector<ModeData> data;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::string p = "/model/modes/" + std::to_string(i);
    rd.only_keys(modes[i], p, {"A", "B", "C", "D", "D1"});
    ModeData md;
    md.A = rd.matrix(rd.require(modes[i], p, "A"), p + "/A");
    md.B = rd.matrix(rd.require(modes[i], p, "B"), p + "/B");
    md.C = rd.matrix(rd.require(modes[i], p, "C"), p + "/C");
    md.D = rd.matrix(rd.require(modes[i], p, "D"), p + "/D");
    md.D1 = rd.matrix(rd.require(modes[i], p, "D1"), p + "/D1");
    data.push_back(std::move(md));
  }
  MarkovChain chain{rd.matrix(rd.require(m, "/model", "transition"), "/model/transition")};

  const json& chans = rd.require(m, "/model", "channels");
  if (!chans.is_array() || chans.empty()) rd.fail("/model/channels", "expected a non-empty array");
  ChannelBank bank;
  for (std::size_t h = 0; h < chans.size(); ++h) {
    const std::string p = "/model/channels/" + std::to_string(h);
    rd.only_keys(chans[h], p, {"stay_good", "recover"});
    bank.channels.push_back({rd.probability(rd.require(chans[h], p, "stay_good"), p + "/stay_good"),
                             rd.probability(rd.require(chans[h], p, "recover"), p + "/recover")});
  }

  Matrix terminal;
  if (m.contains("terminal_weight"))
    terminal = rd.matrix(m.at("terminal_weight"), "/model/terminal_weight");
  try {
    return MjlsModel(std::move(data), std::move(chain), std::move(bank), std::move(terminal));
  } catch (const DimensionError& e) {
    rd.fail(dimension_error_pointer(e.what()), e.what());
  }
}

GameSpec read_game(const Reader& rd, const json& g) {
  rd.only_keys(g, "/game", {"gamma", "gamma_factor", "horizon", "tol", "max_iter",
                            "divergence_bound", "gamma_search"});
  GameSpec out;
  if (g.contains("gamma")) {
    out.gamma = rd.number(g["gamma"], "/game/gamma");
    if (!(*out.gamma > 0.0)) rd.fail("/game/gamma", "gamma must be positive");
  }
  if (g.contains("gamma_factor")) {
    out.gamma_factor = rd.number(g["gamma_factor"], "/game/gamma_factor");
    if (!(out.gamma_factor > 0.0)) rd.fail("/game/gamma_factor", "must be positive");
  }
  if (g.contains("horizon")) {
    const json& h = g["horizon"];
    if (h.is_string()) {
      if (h.get<std::string>() != "infinite") rd.fail("/game/horizon", "expected an integer or \"infinite\"");
    } else {
      out.horizon = static_cast<int>(rd.integer(h, "/game/horizon", 1));
    }
  }
  if (g.contains("tol")) out.solver.tol = rd.number(g["tol"], "/game/tol");
  if (g.contains("max_iter")) out.solver.max_iter = static_cast<int>(rd.integer(g["max_iter"], "/game/max_iter", 1));
  if (g.contains("divergence_bound"))
    out.solver.divergence_bound = rd.number(g["divergence_bound"], "/game/divergence_bound");
  if (g.contains("gamma_search")) {
    const json& s = g["gamma_search"];
    const std::string p = "/game/gamma_search";
    rd.only_keys(s, p, {"lo", "hi", "tol", "horizon_cap", "hi_cap"});
    if (s.contains("lo")) out.search.lo = rd.number(s["lo"], p + "/lo");
    if (s.contains("hi")) out.search.hi = rd.number(s["hi"], p + "/hi");
    if (s.contains("tol")) out.search.tol = rd.number(s["tol"], p + "/tol");
    if (s.contains("horizon_cap"))
      out.search.horizon_cap = static_cast<int>(rd.integer(s["horizon_cap"], p + "/horizon_cap", 1));
    if (s.contains("hi_cap")) out.search.hi_cap = rd.number(s["hi_cap"], p + "/hi_cap");
    if (!(out.search.lo > 0.0 && out.search.hi > out.search.lo && out.search.tol > 0.0 &&
          out.search.hi_cap >= out.search.hi))
      rd.fail(p, "need 0 < lo < hi <= hi_cap and tol > 0");
  }
  out.search.solver = out.solver;
  return out;
}

SimulationSpec read_simulation(const Reader& rd, const json& s, const MjlsModel& model) {
  const std::string p = "/simulation";
  rd.only_keys(s, p, {"x0", "r0", "steps", "trials", "seed", "disturbance", "loss_strategy"});
  SimulationSpec out;
  out.x0 = rd.vector(rd.require(s, p, "x0"), p + "/x0");
  if (out.x0.size() != model.state_dim()) rd.fail(p + "/x0", "length differs from the state dimension");
  if (s.contains("r0")) {
    out.r0 = static_cast<int>(rd.integer(s["r0"], p + "/r0", 1)) - 1;
    if (out.r0 >= model.num_modes()) rd.fail(p + "/r0", "mode out of range");
  }
  if (s.contains("steps")) out.steps = static_cast<int>(rd.integer(s["steps"], p + "/steps", 1));
  if (s.contains("trials")) out.trials = static_cast<int>(rd.integer(s["trials"], p + "/trials", 1));
  if (s.contains("seed")) {
    if (!s["seed"].is_number_unsigned()) rd.fail(p + "/seed", "expected a non-negative integer");
    out.seed = s["seed"].get<std::uint64_t>();
  }
  if (s.contains("loss_strategy")) {
    const json& v = s["loss_strategy"];
    if (v == "zero_input") out.loss = LossStrategy::ZeroInput;
    else if (v == "hold_input") out.loss = LossStrategy::HoldInput;
    else rd.fail(p + "/loss_strategy", "expected \"zero_input\" or \"hold_input\"");
  }
  if (s.contains("disturbance")) {
    const json& d = s["disturbance"];
    const std::string dp = p + "/disturbance";
    rd.only_keys(d, dp, {"type", "frequency", "decay", "samples"});
    const json& type = rd.require(d, dp, "type");
    auto& spec = out.disturbance;
    if (type == "zero") {
      spec.kind = DisturbanceSpec::Kind::Zero;
    } else if (type == "worst_case") {
      spec.kind = DisturbanceSpec::Kind::WorstCase;
    } else if (type == "waveform") {
      spec.kind = DisturbanceSpec::Kind::Waveform;
      if (d.contains("frequency")) spec.frequency = rd.number(d["frequency"], dp + "/frequency");
      if (d.contains("decay")) spec.decay = rd.number(d["decay"], dp + "/decay");
    } else if (type == "table") {
      spec.kind = DisturbanceSpec::Kind::Table;
      const json& rows = rd.require(d, dp, "samples");
      if (!rows.is_array()) rd.fail(dp + "/samples", "expected an array of vectors");
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::string kp = dp + "/samples/" + std::to_string(k);
        Vector w = rd.vector(rows[k], kp);
        if (w.size() != model.disturbance_dim()) rd.fail(kp, "length differs from the disturbance dimension");
        spec.samples.push_back(std::move(w));
      }
    } else {
      rd.fail(dp + "/type", "expected zero, worst_case, waveform or table");
    }
  }
  return out;
}

SweepSpec read_sweep(const Reader& rd, const json& s, const MjlsModel& model) {
  const std::string p = "/sweep";
  rd.only_keys(s, p, {"channel", "field", "grid"});
  SweepSpec out;
  out.parameter.channel = static_cast<int>(rd.integer(rd.require(s, p, "channel"), p + "/channel", 1)) - 1;
  if (out.parameter.channel >= model.input_dim()) rd.fail(p + "/channel", "channel out of range");
  const json& f = rd.require(s, p, "field");
  if (f == "stay_good") out.parameter.field = ChannelField::StayGood;
  else if (f == "recover") out.parameter.field = ChannelField::Recover;
  else rd.fail(p + "/field", "expected \"stay_good\" or \"recover\"");
  const json& grid = rd.require(s, p, "grid");
  if (!grid.is_array() || grid.empty()) rd.fail(p + "/grid", "expected a non-empty array");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double v = rd.number(grid[k], p + "/grid/" + std::to_string(k));
    if (!(v > 0.0 && v <= 1.0)) rd.fail(p + "/grid/" + std::to_string(k), "grid values must lie in (0, 1]");
    out.grid.push_back(v);
  }
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

bool same_matrix(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    int line = 1, column = 1;
    for (std::size_t k = 0; k < upto; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string msg = e.what();
    if (auto cut = msg.find("syntax error"); cut != std::string::npos) msg = msg.substr(cut);
    throw ScenarioError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg);
  }

  const Reader rd(text);
  rd.only_keys(doc, "", {"format_version", "name", "model", "game", "simulation", "sweep", "outputs"});
  const int version = static_cast<int>(rd.integer(rd.require(doc, "", "format_version"), "/format_version", 1));
  if (version != kScenarioFormatVersion)
    rd.fail("/format_version", "unsupported format_version " + std::to_string(version));

  Scenario sc{version, "", read_model(rd, rd.require(doc, "", "model")), {}, std::nullopt, std::nullopt, "."};
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) rd.fail("/name", "expected a string");
    sc.name = doc["name"].get<std::string>();
  }
  if (doc.contains("game")) sc.game = read_game(rd, doc["game"]);
  if (doc.contains("simulation")) sc.simulation = read_simulation(rd, doc["simulation"], sc.model);
  if (doc.contains("sweep")) sc.sweep = read_sweep(rd, doc["sweep"], sc.model);
  if (doc.contains("outputs")) {
    rd.only_keys(doc["outputs"], "/outputs", {"directory"});
    if (doc["outputs"].contains("directory")) {
      if (!doc["outputs"]["directory"].is_string()) rd.fail("/outputs/directory", "expected a string");
      sc.output_directory = doc["outputs"]["directory"].get<std::string>();
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& sc) {
  json doc;
  doc["format_version"] = sc.format_version;
  if (!sc.name.empty()) doc["name"] = sc.name;

  json model;
  json modes = json::array();
  for (const auto& md : sc.model.modes()) {
    modes.push_back({{"A", matrix_json(md.A)},
                     {"B", matrix_json(md.B)},
                     {"C", matrix_json(md.C)},
                     {"D", matrix_json(md.D)},
                     {"D1", matrix_json(md.D1)}});
  }
  model["modes"] = std::move(modes);
  model["transition"] = matrix_json(sc.model.chain().transition);
  json chans = json::array();
  for (const auto& ch : sc.model.bank().channels)
    chans.push_back({{"stay_good", ch.stay_good}, {"recover", ch.recover}});
  model["channels"] = std::move(chans);
  model["terminal_weight"] = matrix_json(sc.model.terminal_weight());
  doc["model"] = std::move(model);

  const GameSpec& g = sc.game;
  json game;
  if (g.gamma) game["gamma"] = *g.gamma;
  game["gamma_factor"] = g.gamma_factor;
  if (g.horizon) game["horizon"] = *g.horizon;
  else game["horizon"] = "infinite";
  game["tol"] = g.solver.tol;
  game["max_iter"] = g.solver.max_iter;
  game["divergence_bound"] = g.solver.divergence_bound;
  game["gamma_search"] = {{"lo", g.search.lo},
                          {"hi", g.search.hi},
                          {"tol", g.search.tol},
                          {"horizon_cap", g.search.horizon_cap},
                          {"hi_cap", g.search.hi_cap}};
  doc["game"] = std::move(game);

  if (sc.simulation) {
    const SimulationSpec& s = *sc.simulation;
    json sim;
    sim["x0"] = vector_json(s.x0);
    sim["r0"] = s.r0 + 1;
    sim["steps"] = s.steps;
    sim["trials"] = s.trials;
    sim["seed"] = s.seed;
    sim["loss_strategy"] = to_string(s.loss);
    json d;
    switch (s.disturbance.kind) {
      case DisturbanceSpec::Kind::Zero: d["type"] = "zero"; break;
      case DisturbanceSpec::Kind::WorstCase: d["type"] = "worst_case"; break;
      case DisturbanceSpec::Kind::Waveform:
        d["type"] = "waveform";
        d["frequency"] = s.disturbance.frequency;
        d["decay"] = s.disturbance.decay;
        break;
      case DisturbanceSpec::Kind::Table: {
        d["type"] = "table";
        json rows = json::array();
        for (const auto& w : s.disturbance.samples) rows.push_back(vector_json(w));
        d["samples"] = std::move(rows);
        break;
      }
    }
    sim["disturbance"] = std::move(d);
    doc["simulation"] = std::move(sim);
  }
  if (sc.sweep) {
    doc["sweep"] = {{"channel", sc.sweep->parameter.channel + 1},
                    {"field", sc.sweep->parameter.field == ChannelField::StayGood ? "stay_good" : "recover"},
                    {"grid", sc.sweep->grid}};
  }
  doc["outputs"] = {{"directory", sc.output_directory}};
  return doc.dump(2) + "\n";
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  if (a.format_version != b.format_version || a.name != b.name ||
      a.output_directory != b.output_directory)
    return false;

  const MjlsModel &ma = a.model, &mb = b.model;
  if (ma.num_modes() != mb.num_modes()) return false;
  for (int i = 0; i < ma.num_modes(); ++i) {
    const ModeData &x = ma.mode(i), &y = mb.mode(i);
    if (!same_matrix(x.A, y.A) || !same_matrix(x.B, y.B) || !same_matrix(x.C, y.C) ||
        !same_matrix(x.D, y.D) || !same_matrix(x.D1, y.D1))
      return false;
  }
  if (!same_matrix(ma.chain().transition, mb.chain().transition)) return false;
  if (!same_matrix(ma.terminal_weight(), mb.terminal_weight())) return false;
  if (ma.bank().size() != mb.bank().size()) return false;
  for (int h = 0; h < ma.bank().size(); ++h) {
    const auto &x = ma.bank().channels[static_cast<std::size_t>(h)];
    const auto &y = mb.bank().channels[static_cast<std::size_t>(h)];
    if (x.stay_good != y.stay_good || x.recover != y.recover) return false;
  }

  const GameSpec &ga = a.game, &gb = b.game;
  if (ga.gamma != gb.gamma || ga.gamma_factor != gb.gamma_factor || ga.horizon != gb.horizon ||
      ga.solver.tol != gb.solver.tol || ga.solver.max_iter != gb.solver.max_iter ||
      ga.solver.divergence_bound != gb.solver.divergence_bound || ga.search.lo != gb.search.lo ||
      ga.search.hi != gb.search.hi || ga.search.tol != gb.search.tol ||
      ga.search.horizon_cap != gb.search.horizon_cap || ga.search.hi_cap != gb.search.hi_cap)
    return false;

  if (a.simulation.has_value() != b.simulation.has_value()) return false;
  if (a.simulation) {
    const SimulationSpec &sa = *a.simulation, &sb = *b.simulation;
    if (sa.x0 != sb.x0 || sa.r0 != sb.r0 || sa.steps != sb.steps || sa.trials != sb.trials ||
        sa.seed != sb.seed || sa.loss != sb.loss || sa.disturbance.kind != sb.disturbance.kind ||
        sa.disturbance.frequency != sb.disturbance.frequency ||
        sa.disturbance.decay != sb.disturbance.decay ||
        sa.disturbance.samples.size() != sb.disturbance.samples.size())
      return false;
    for (std::size_t k = 0; k < sa.disturbance.samples.size(); ++k)
      if (sa.disturbance.samples[k] != sb.disturbance.samples[k]) return false;
  }

  if (a.sweep.has_value() != b.sweep.has_value()) return false;
  if (a.sweep) {
    if (a.sweep->parameter.channel != b.sweep->parameter.channel ||
        a.sweep->parameter.field != b.sweep->parameter.field || a.sweep->grid != b.sweep->grid)
      return false;
  }
  return true;
}

DisturbancePolicy make_disturbance(const DisturbanceSpec& spec, int steps, int dim) {
  switch (spec.kind) {
    case DisturbanceSpec::Kind::Zero: return ZeroDisturbance{};
    case DisturbanceSpec::Kind::WorstCase: return WorstCaseDisturbance{};
    case DisturbanceSpec::Kind::Waveform: return decaying_sinusoid(steps, dim, spec.frequency, spec.decay);
    case DisturbanceSpec::Kind::Table: return WaveformDisturbance{spec.samples};
  }
  return ZeroDisturbance{};
}

}  // namespace mjls
