#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "r4surf/run.hpp"

namespace fs = std::filesystem;
using namespace r4surf;

namespace {

struct Args {
  std::string config;
  std::string out;
  std::string grid;
  std::string seed_gauge;
};

RunConfig load(const Args& a) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.grid.empty()) std::tie(cfg.nu, cfg.nv) = parse_grid(a.grid);
  if (!a.seed_gauge.empty()) {
    const auto comma = a.seed_gauge.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(a.seed_gauge);
      std::size_t used = 0;
      const double u = std::stod(a.seed_gauge.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument(a.seed_gauge);
      const std::string vs = a.seed_gauge.substr(comma + 1);
      const double v = std::stod(vs, &used);
      if (used != vs.size()) throw std::invalid_argument(a.seed_gauge);
      cfg.base_point = Vec2(u, v);
    } catch (const std::logic_error&) {
      throw ConfigError("--seed-gauge must look like U,V, got '" + a.seed_gauge + "'");
    }
    if (!cfg.surface.domain.contains(*cfg.base_point)) {
      throw ConfigError("--seed-gauge point lies outside the surface domain");
    }
  }
  if (!a.out.empty()) cfg.outputs = a.out;
  return cfg;
}

fs::path prepare(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("error writing " + path.string());
}

void print_reports(const SuiteResult& r) {
  for (const auto& c : r.reports) {
    std::string status = to_string(c.status);
    for (auto& ch : status) ch = static_cast<char>(std::toupper(ch));
    std::printf("%-12s stage %d  %-38s max_error=%-12.4g tol=%-8.3g checked=%d masked=%d%s%s\n",
                status.c_str(), c.stage, c.name.c_str(), c.max_error, c.tolerance,
                c.nodes_checked, c.nodes_masked, c.note.empty() ? "" : "  # ", c.note.c_str());
  }
}

int suite(const Args& a, bool meshes) {
  const RunConfig cfg = load(a);
  auto ctx = make_context(cfg);
  const SuiteResult r = run_suite(*ctx, cfg.pipeline, cfg.suite_options());
  const Vec2 base = ctx->grid().node(ctx->base_node());
  const bool want_report = cfg.emit_report;
  const bool want_mesh = meshes && cfg.emit_mesh;
  const bool want_diag = meshes && cfg.emit_diagnostics;
  if (want_report || want_mesh || want_diag) {
    const fs::path dir = prepare(cfg.outputs);
    const int stages = static_cast<int>(r.stages.size());
    for (int s = 0; s <= stages; ++s) {
      const std::string tag = std::to_string(s);
      if (want_mesh) {
        write_file(dir / ("mesh_" + tag + ".csv"),
                   [&](std::ostream& o) { write_mesh_csv(o, *ctx, r, s); });
      }
      if (want_diag) {
        SurfaceContext& img = s == 0 ? *ctx : *r.stages[s - 1].image;
        write_file(dir / ("diag_" + tag + ".csv"), [&](std::ostream& o) { write_diag_csv(o, img); });
      }
    }
    if (want_report) {
      write_file(dir / "report.json",
                 [&](std::ostream& o) { o << report_json(cfg, base, r).dump(2) << '\n'; });
    }
  }
  print_reports(r);
  const bool ok = r.all_passed(cfg.fail_on_inconclusive);
  std::printf("%s\n", ok ? "all checks passed" : "checks failed");
  return ok ? 0 : 1;
}

int classify(const Args& a) {
  const RunConfig cfg = load(a);
  auto ctx = make_context(cfg);
  nlohmann::json j = classify_summary(*ctx);
  j["surface"] = cfg.surface.describe();
  j["grid"] = {cfg.nu, cfg.nv};
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformations of surfaces in R^4 with invariant checks"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);
  Args args;

  auto* run = app.add_subcommand("run", "run the pipeline; write meshes, diagnostics and report");
  run->add_option("config", args.config, "run configuration (JSON)")->required();
  run->add_option("--out", args.out, "output directory (overrides the config)");
  run->add_option("--grid", args.grid, "grid size NUxNV (overrides the config)");
  run->add_option("--seed-gauge", args.seed_gauge, "base point U,V for e and k");

  auto* check = app.add_subcommand("check", "run the checks only; write report.json");
  check->add_option("config", args.config, "run configuration (JSON)")->required();
  check->add_option("--out", args.out, "output directory (overrides the config)");
  check->add_option("--grid", args.grid, "grid size NUxNV (overrides the config)");
  check->add_option("--seed-gauge", args.seed_gauge, "base point U,V for e and k");

  auto* cls = app.add_subcommand("classify", "print point classes and bundle flatness");
  cls->add_option("config", args.config, "run configuration (JSON)")->required();
  cls->add_option("--grid", args.grid, "grid size NUxNV (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return suite(args, true);
    if (check->parsed()) return suite(args, false);
    return classify(args);
  } catch (const r4surf::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
