// Batch driver. Every stage reads its inputs from files and writes under --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "shieldroute/bypass.hpp"
#include "shieldroute/error.hpp"
#include "shieldroute/exposure.hpp"
#include "shieldroute/gds.hpp"
#include "shieldroute/guardplan.hpp"
#include "shieldroute/metrics.hpp"
#include "shieldroute/netlist.hpp"
#include "shieldroute/tamper.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace shieldroute;

namespace {

enum class LogLevel { Quiet, Info, Debug };
LogLevel g_log = LogLevel::Info;

void log(LogLevel at, const std::string& msg) {
  if (static_cast<int>(at) <= static_cast<int>(g_log)) std::cerr << "[shieldroute] " << msg << '\n';
}

LogLevel parse_log_level(const std::string& s) {
  if (s == "quiet" || s == "error") return LogLevel::Quiet;
  if (s == "info" || s.empty()) return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw Error("SHIELDROUTE_LOG must be quiet, info or debug, got '" + s + "'");
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << body;
  log(LogLevel::Debug, "wrote " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

struct Config {
  std::string tech, netlist, layout, layermap, out = "shieldroute_out";
  int depth = 2;
  std::string architecture = "fully_connected";
  double confidence = 0.95;
  std::uint64_t seed = 1;
  Nm via_penalty = 0;
  std::vector<TrojanDescriptor> trojans{a2_analog(), a2_digital()};

  // attack
  std::string kind = "jog", variant = "lengthening", guard;
  int count = 1, move_steps = 10;
  // detect
  std::string detect_layout;
};

// Relative paths in a config file are taken from the file's directory.
void load_config(const std::string& path, Config& c) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error("config " + path + ": " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();
  auto path_of = [&](const char* key, std::string& dst) {
    if (j.contains(key)) dst = (base / j.at(key).get<std::string>()).lexically_normal().string();
  };
  static const std::set<std::string> known{"tech",       "netlist", "layout", "layermap",    "out",    "depth",
                                           "architecture", "confidence", "seed", "via_penalty", "trojans"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error("config " + path + ": unknown key '" + k + "'");
  path_of("tech", c.tech);
  path_of("netlist", c.netlist);
  path_of("layout", c.layout);
  path_of("layermap", c.layermap);
  path_of("out", c.out);
  if (j.contains("depth")) c.depth = j.at("depth").get<int>();
  if (j.contains("architecture")) c.architecture = j.at("architecture").get<std::string>();
  if (j.contains("confidence")) c.confidence = j.at("confidence").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("via_penalty")) c.via_penalty = j.at("via_penalty").get<Nm>();
  if (j.contains("trojans")) {
    c.trojans.clear();
    for (const auto& t : j.at("trojans"))
      c.trojans.push_back({t.at("name").get<std::string>(), t.at("std_cells").get<int>(),
                           t.at("placement_sites").get<int>(), t.value("timing_critical", false)});
  }
}

void check(const Config& c) {
  if (!(c.confidence > 0.5 && c.confidence < 1.0)) throw Error("confidence must lie in (0.5, 1)");
  if (c.depth < 0) throw Error("depth must be non-negative");
  parse_architecture(c.architecture);
  for (const auto* p : {&c.tech, &c.netlist, &c.layout, &c.layermap})
    if (!p->empty() && !fs::exists(*p)) throw Error("file not found: " + *p);
}

class Pipeline {
 public:
  explicit Pipeline(Config c) : c_(std::move(c)), out_(c_.out) {}

  void nets() {
    const auto nl = load_netlist();
    const auto roots = find_roots(nl);
    if (roots.empty()) throw Error("netlist " + c_.netlist + " has no net with the secure_ prefix");
    const auto ts = expand_fanin(nl, roots, c_.depth);
    json j;
    j["netlist"] = fs::path(c_.netlist).filename().string();
    j["depth"] = ts.depth;
    j["roots"] = ts.roots;
    j["targets"] = ts.targets;
    write_json(out_ / "targets.json", j);
    log(LogLevel::Info, "nets: " + std::to_string(ts.roots.size()) + " roots, " + std::to_string(ts.targets.size()) +
                            " targets at depth " + std::to_string(ts.depth));
  }

  void exposure() {
    const auto targets = load_targets();
    const auto lay = load_layout();
    const auto ex = scan_exposure(lay, present(lay, targets));
    write_file(out_ / "exposure.json", exposure_to_json(ex));
    log(LogLevel::Info, "exposure: blockage " + fmt_pct(net_blockage(ex)));
  }

  void guard() {
    require("exposure.json", "exposure");
    const auto targets = load_targets();
    const auto lay = load_layout();
    const auto routed = present(lay, targets);
    const auto ex = scan_exposure(lay, routed);
    const auto planned = plan_guards(lay, ex, {parse_architecture(c_.architecture)});
    const auto after = scan_exposure(planned.layout, routed);
    const auto drc = drc_check(planned.layout);
    write_file(out_ / "guarded.layout", write_layout(planned.layout));
    const auto bytes = write_gds(planned.layout, layer_map());
    write_file(out_ / "guarded.gds", std::string(bytes.begin(), bytes.end()));
    write_file(out_ / "guard_plan.txt", write_guard_plan(planned.plan));
    json j;
    j["architecture"] = to_string(planned.plan.architecture);
    j["guard_nets"] = planned.plan.guards.size();
    j["blockage_before_pct"] = net_blockage(ex);
    j["blockage_after_pct"] = net_blockage(after);
    j["drc_violations"] = drc.size();
    json per = json::object();
    for (const auto& [name, ne] : after.nets) per[name] = 100.0 * ne.blocked_fraction();
    j["target_blockage_pct"] = per;
    write_json(out_ / "guard.json", j);
    log(LogLevel::Info, "guard: " + std::to_string(planned.plan.guards.size()) + " guard nets, blockage " +
                            fmt_pct(net_blockage(ex)) + " -> " + fmt_pct(net_blockage(after)) + ", " +
                            std::to_string(drc.size()) + " DRC violations");
  }

  void metrics() {
    require("exposure.json", "exposure");
    const auto targets = load_targets();
    const auto lay = load_layout();
    const auto routed = present(lay, targets);
    json j;
    auto one = [&](const Layout& l, const std::string& tag) {
      const auto ex = scan_exposure(l, routed);
      const auto ts = trigger_space(l);
      const auto hm = route_distance(l, ex, ts, c_.via_penalty);
      j[tag] = json::parse(metrics_to_json(ts, ex, hm, c_.trojans));
      write_file(out_ / ("heatmap_" + tag + ".csv"), heatmap_to_csv(hm));
      write_file(out_ / ("trigger_histogram_" + tag + ".csv"), trigger_histogram_to_csv(ts));
      for (const auto& t : c_.trojans)
        log(LogLevel::Info, "metrics " + tag + ": " + t.name + " " +
                                (feasibility(hm, t).feasible ? "feasible" : "infeasible"));
    };
    one(lay, "before");
    if (fs::exists(out_ / "guarded.layout")) one(read_layout(read_file(out_ / "guarded.layout"), tech()), "after");
    write_json(out_ / "metrics.json", j);
  }

  void attack() {
    const auto [lay, plan] = load_guarded();
    const AttackKind kind = parse_attack_kind(c_.kind);
    if (c_.count < 1) throw Error("--count must be at least 1");
    SplitMix64 rng(c_.seed);
    std::vector<JogSite> sites;
    if (kind == AttackKind::Jog) {
      sites = jog_sites(lay, plan);
      if (!c_.guard.empty()) std::erase_if(sites, [&](const JogSite& s) { return s.guard != c_.guard; });
      if (sites.empty()) throw InfeasibleError("no jog site: no guard runs over or under a target");
    }
    std::optional<AttackResult> last;
    for (int k = 0; k < c_.count; ++k) {
      const std::uint64_t pick = rng();
      std::optional<AttackResult> res;
      if (kind == AttackKind::Jog) {
        const auto variant = parse_jog_variant(c_.variant);
        std::string why;
        for (std::size_t t = 0; t < sites.size() && !res; ++t) {
          const auto& s = sites[(pick + t) % sites.size()];
          try {
            res = jog_attack(lay, plan, s.target, s.attach, variant, s.guard_layer);
          } catch (const InfeasibleError& e) {
            why = e.what();
          }
        }
        if (!res) throw InfeasibleError("no jog site admits the edit: " + why);
      } else {
        const std::string g = c_.guard.empty() ? plan.guards.at(pick % plan.guards.size()).name : c_.guard;
        if (kind == AttackKind::Delete) {
          res = delete_attack(lay, g);
        } else {
          // Nearest free spot at least --steps away, searching outward.
          const Nm step = move_step(lay, {g});
          for (int k = c_.move_steps; k <= 8 * c_.move_steps && !res; ++k) {
            const Nm s = k * step;
            for (Point t : {Point{0, s}, Point{0, -s}, Point{s, 0}, Point{-s, 0}}) {
              try {
                res = move_attack(lay, {g}, t);
                break;
              } catch (const InfeasibleError&) {
              }
            }
          }
          if (!res) throw InfeasibleError("no legal move of " + g + " within " + std::to_string(8 * c_.move_steps) + " steps");
        }
      }
      char stem[64];
      std::snprintf(stem, sizeof stem, "attacks/%s_%03d", c_.kind.c_str(), k);
      write_file(out_ / (std::string(stem) + ".layout"), write_layout(res->layout));
      write_file(out_ / (std::string(stem) + ".json"), attack_record_to_json(res->record));
      last = std::move(res);
    }
    write_file(out_ / "attacked.layout", write_layout(last->layout));
    write_file(out_ / "attack.json", attack_record_to_json(last->record));
    log(LogLevel::Info, "attack: wrote " + std::to_string(c_.count) + " " + c_.kind + " layout(s)");
  }

  // Returns true when tampering was found.
  bool detect() {
    require("guard_plan.txt", "guard");
    const GuardPlan plan = read_guard_plan(read_file(out_ / "guard_plan.txt"));
    fs::path under = c_.detect_layout;
    if (under.empty()) under = fs::exists(out_ / "attacked.layout") ? out_ / "attacked.layout" : out_ / "guarded.layout";
    const auto lay = read_layout(read_file(under), tech());
    DetectOptions o;
    o.confidence = c_.confidence;
    o.seed = c_.seed;
    const auto rep = shieldroute::detect(plan, lay, o);
    write_file(out_ / "detection.json", detection_to_json(rep));
    log(LogLevel::Info, "detect " + under.filename().string() + ": continuity " + to_string(rep.continuity.verdict) +
                            ", coupling " + to_string(rep.coupling.verdict) + ", tdr_length " +
                            to_string(rep.tdr_length.verdict) + ", tdr_bends " + to_string(rep.tdr_bends.verdict));
    return rep.tampered();
  }

  void table2() {
    const std::string csv = shieldroute::table2_csv(rules(), TdrModel{});
    write_file(out_ / "table2.csv", csv);
    std::cout << csv;
  }

  void report() {
    json j;
    int found = 0;
    for (const char* name : {"targets.json", "exposure.json", "guard.json", "metrics.json", "detection.json"}) {
      const fs::path p = out_ / name;
      if (!fs::exists(p)) continue;
      ++found;
      j[fs::path(name).stem().string()] = json::parse(read_file(p));
    }
    if (fs::exists(out_ / "attack.json")) {
      ++found;
      j["attack"] = json::parse(read_file(out_ / "attack.json"));
    }
    if (found == 0) throw Error("nothing to report in " + out_.string() + ": run a pipeline stage first");
    write_json(out_ / "report.json", j);
    write_file(out_ / "summary.txt", summary(j));
    std::cout << summary(j);
  }

 private:
  const std::shared_ptr<const TechRules>& tech() {
    if (!rules_) {
      if (c_.tech.empty()) throw Error("no technology file: pass --tech or set \"tech\" in the config");
      rules_ = std::make_shared<const TechRules>(parse_tech(read_file(c_.tech)));
    }
    return rules_;
  }
  const TechRules& rules() { return *tech(); }

  LayerMap layer_map() {
    rules();
    return c_.layermap.empty() ? default_layer_map(*rules_) : parse_layer_map(read_file(c_.layermap), *rules_);
  }

  Netlist load_netlist() {
    if (c_.netlist.empty()) throw Error("no netlist: pass --netlist or set \"netlist\" in the config");
    const bool verilog = fs::path(c_.netlist).extension() == ".v";
    return parse_netlist(read_file(c_.netlist), verilog ? NetlistFormat::Verilog : NetlistFormat::Native);
  }

  Layout load_layout() {
    if (c_.layout.empty()) throw Error("no layout: pass --layout or set \"layout\" in the config");
    rules();
    if (fs::path(c_.layout).extension() == ".gds") {
      const std::string raw = read_file(c_.layout);
      return read_gds({raw.begin(), raw.end()}, layer_map(), rules_);
    }
    return read_layout(read_file(c_.layout), rules_);
  }

  std::pair<Layout, GuardPlan> load_guarded() {
    require("guard_plan.txt", "guard");
    require("guarded.layout", "guard");
    rules();
    return {read_layout(read_file(out_ / "guarded.layout"), rules_),
            read_guard_plan(read_file(out_ / "guard_plan.txt"))};
  }

  std::set<std::string> load_targets() {
    require("targets.json", "nets");
    const auto j = json::parse(read_file(out_ / "targets.json"));
    return j.at("targets").get<std::set<std::string>>();
  }

  // Fan-in can reach nets with no wiring in the layout (primary inputs tied off-die).
  static std::set<std::string> present(const Layout& lay, const std::set<std::string>& targets) {
    std::set<std::string> out;
    for (const auto& t : targets) {
      const RoutedNet* n = lay.find_net(t);
      if (n && !n->segments.empty()) out.insert(t);
      else log(LogLevel::Debug, "target " + t + " has no wiring; skipped");
    }
    if (out.empty()) throw Error("none of the targets is routed in the layout");
    return out;
  }

  void require(const std::string& file, const std::string& stage) const {
    if (!fs::exists(out_ / file))
      throw Error("missing " + (out_ / file).string() + ": run `" + stage + "` first");
  }

  static std::string fmt_pct(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3f%%", v);
    return b;
  }

  static std::string summary(const json& j) {
    std::ostringstream s;
    if (j.contains("targets"))
      s << "targets: " << j["targets"]["targets"].size() << " nets (" << j["targets"]["roots"].size()
        << " roots, depth " << j["targets"]["depth"] << ")\n";
    if (j.contains("guard")) {
      const auto& g = j["guard"];
      s << "guard: " << g["architecture"].get<std::string>() << ", " << g["guard_nets"] << " guard nets, blockage "
        << fmt_pct(g["blockage_before_pct"].get<double>()) << " -> " << fmt_pct(g["blockage_after_pct"].get<double>())
        << ", " << g["drc_violations"] << " DRC violations\n";
      for (const auto& [name, pct] : g["target_blockage_pct"].items())
        s << "  " << name << ": " << fmt_pct(pct.get<double>()) << "\n";
    }
    if (j.contains("metrics"))
      for (const auto& [tag, m] : j["metrics"].items())
        if (m.contains("feasibility"))
          for (const auto& f : m["feasibility"]) s << "feasibility " << tag << ": " << f.dump() << "\n";
    if (j.contains("detection")) {
      const auto& d = j["detection"];
      s << "detection:";
      for (const char* ch : {"continuity", "coupling", "tdr_length", "tdr_bends"})
        if (d["channels"].contains(ch)) s << ' ' << ch << '=' << d["channels"][ch]["verdict"].get<std::string>();
      s << "\n";
    }
    if (j.contains("attack")) s << "attack: " << j["attack"]["kind"].get<std::string>() << "\n";
    return s.str();
  }

  Config c_;
  fs::path out_;
  std::shared_ptr<const TechRules> rules_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guard-wire planning, attack simulation and tamper detection for routed layouts"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  Config flags;
  app.add_option("--config", config_path, "JSON pipeline config")->check(CLI::ExistingFile);
  auto* o_tech = app.add_option("--tech", flags.tech, "technology file");
  auto* o_net = app.add_option("--netlist", flags.netlist, "netlist (.net native or .v)");
  auto* o_lay = app.add_option("--layout", flags.layout, "layout (.layout or .gds)");
  auto* o_map = app.add_option("--layermap", flags.layermap, "GDS layer map");
  auto* o_out = app.add_option("--out", flags.out, "output directory");
  auto* o_depth = app.add_option("--depth", flags.depth, "fan-in depth (default 2)");
  auto* o_arch = app.add_option("--arch", flags.architecture,
                                "fully_disjoint, partially_connected or fully_connected (default)");
  auto* o_conf = app.add_option("--confidence", flags.confidence, "detection confidence (default 0.95)");
  auto* o_seed = app.add_option("--seed", flags.seed, "seed for attacks and TDR noise");
  auto* o_vp = app.add_option("--via-penalty", flags.via_penalty, "route-distance nm per layer (default 0)");

  std::vector<std::pair<std::string, CLI::App*>> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"nets", "find target nets (roots plus fan-in)"},
           {"exposure", "scan target surfaces for attachable intervals"},
           {"guard", "place guard wires and write the golden plan"},
           {"metrics", "trigger space, route distance and Trojan feasibility"},
           {"attack", "simulate delete, move or jog edits on the guarded layout"},
           {"detect", "run continuity, coupling and TDR checks; exit 2 when tampered"},
           {"table2", "per-layer detectability table as CSV"},
           {"all", "nets, exposure, guard, metrics, table2 and report"},
           {"report", "aggregate stage outputs into report.json and summary.txt"}})
    subs.emplace_back(name, app.add_subcommand(name, help));
  CLI::App* attack = app.get_subcommand("attack");
  attack->add_option("--kind", flags.kind, "delete, move or jog")->default_val("jog");
  attack->add_option("--variant", flags.variant, "lengthening or bend_preserving")->default_val("lengthening");
  attack->add_option("--guard", flags.guard, "guard net to edit (default: seeded choice)");
  attack->add_option("--count", flags.count, "layouts to generate")->default_val(1);
  attack->add_option("--steps", flags.move_steps, "move distance in grid steps")->default_val(10);
  app.get_subcommand("detect")->add_option("--layout-under-test", flags.detect_layout,
                                           "layout to check (default attacked.layout, else guarded.layout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (const char* lv = std::getenv("SHIELDROUTE_LOG")) g_log = parse_log_level(lv);
    Config c;
    if (!config_path.empty()) load_config(config_path, c);
    if (const char* env_out = std::getenv("SHIELDROUTE_OUT"); env_out && o_out->count() == 0) c.out = env_out;
    auto take = [](CLI::Option* o, auto& dst, const auto& src) {
      if (o->count()) dst = src;
    };
    take(o_tech, c.tech, flags.tech);
    take(o_net, c.netlist, flags.netlist);
    take(o_lay, c.layout, flags.layout);
    take(o_map, c.layermap, flags.layermap);
    take(o_out, c.out, flags.out);
    take(o_depth, c.depth, flags.depth);
    take(o_arch, c.architecture, flags.architecture);
    take(o_conf, c.confidence, flags.confidence);
    take(o_seed, c.seed, flags.seed);
    take(o_vp, c.via_penalty, flags.via_penalty);
    c.kind = flags.kind;
    c.variant = flags.variant;
    c.guard = flags.guard;
    c.count = flags.count;
    c.move_steps = flags.move_steps;
    c.detect_layout = flags.detect_layout;
    check(c);

    Pipeline p(c);
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "nets") p.nets();
    else if (cmd == "exposure") p.exposure();
    else if (cmd == "guard") p.guard();
    else if (cmd == "metrics") p.metrics();
    else if (cmd == "attack") p.attack();
    else if (cmd == "detect") return p.detect() ? 2 : 0;
    else if (cmd == "table2") p.table2();
    else if (cmd == "report") p.report();
    else if (cmd == "all") {
      p.nets();
      p.exposure();
      p.guard();
      p.metrics();
      p.table2();
      p.report();
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
