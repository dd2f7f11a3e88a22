#include "klgeo/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "klgeo/experiments.hpp"
#include "klgeo/format.hpp"
#include "klgeo/output.hpp"
#include "klgeo/svg.hpp"

namespace klgeo {

namespace {

std::string path_in(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

nlohmann::ordered_json jnum(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void sweep_plots(const RunConfig& cfg, const MultiSeedSummary& summary, const Provenance& prov) {
  struct Metric {
    const char* file;
    const char* label;
    double (*get)(const SweepRecord&);
  };
  const Metric metrics[] = {
      {"validity.svg", "validity", [](const SweepRecord& r) { return r.validity; }},
      {"tvd_to_pstar.svg", "TVD to p*", [](const SweepRecord& r) { return r.tvd_to_pstar; }},
      {"fkl_from_pstar.svg", "KL(p* || pi)",
       [](const SweepRecord& r) { return r.fkl_from_pstar.as_double(); }},
      {"entropy.svg", "entropy", [](const SweepRecord& r) { return r.entropy; }},
      {"j_beta.svg", "J_beta", [](const SweepRecord& r) { return r.j_beta_value; }},
  };
  for (const auto& m : metrics) {
    std::vector<SvgSeries> series;
    for (const auto& s : summary.seeds) {
      SvgSeries ser{"seed " + std::to_string(s.seed), {}, {}};
      for (const auto* r : s.cold_records()) {
        ser.x.push_back(r->lambda);
        ser.y.push_back(r->aborted ? std::numeric_limits<double>::infinity() : m.get(*r));
      }
      series.push_back(std::move(ser));
    }
    SvgOptions opt;
    opt.title = std::string(m.label) + " vs lambda (" + to_string(summary.order) + ")";
    opt.y_label = m.label;
    opt.log_x = true;
    opt.provenance = prov.line();
    emit_svg(series, opt, path_in(cfg, m.file));
  }
}

void geometry_plots(const RunConfig& cfg, const std::vector<GeometryRow>& rows,
                    const OrderingIllustration& ill, const Provenance& prov) {
  for (int which = 0; which < 2; ++which) {
    std::vector<SvgSeries> series;
    for (double a1 : cfg.geometry_a1) {
      SvgSeries s{"A1=" + format_double(a1), {}, {}};
      for (const auto& r : rows) {
        if (r.a1 != a1) continue;
        s.x.push_back(r.lambda);
        s.y.push_back(which == 0 ? r.tvd_pstar : r.fkl_pstar);
      }
      series.push_back(std::move(s));
    }
    SvgOptions opt;
    opt.title = which == 0 ? "TVD(p*, p_lambda)" : "KL(p* || p_lambda)";
    opt.y_label = which == 0 ? "TVD" : "forward KL";
    opt.provenance = prov.line();
    emit_svg(series, opt, path_in(cfg, which == 0 ? "geometry_tvd.svg" : "geometry_fkl.svg"));
  }
  std::vector<SvgSeries> series;
  for (std::size_t i = 0; i < ill.candidates.size(); ++i) {
    series.push_back({ill.candidates[i].name, ill.lambdas, ill.curves[i]});
  }
  SvgOptions opt;
  opt.title = "KL(pi_i || p_lambda)";
  opt.y_label = "KL";
  opt.provenance = prov.line();
  emit_svg(series, opt, path_in(cfg, "ordering.svg"));
}

}  // namespace

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_directory(cfg.out_dir);
  const Provenance prov{"sweep", cfg.seeds};
  const auto sc = cfg.sweep_config();

  MultiSeedSummary summary;
  if (cfg.seeds.size() >= 2) {
    summary = multi_seed(cfg.seeds, cfg.order, cfg.lambdas, sc, cfg.threads);
  } else {
    summary = aggregate_summaries({run_sweep(cfg.seeds.front(), cfg.order, cfg.lambdas, sc)},
                                  cfg.order, cfg.lambdas);
  }

  write_text_file(path_in(cfg, "config.echo"), config_echo(cfg, prov));
  write_text_file(path_in(cfg, "sweep.csv"), to_csv(sweep_table(summary.seeds), prov));
  write_text_file(path_in(cfg, "refs.csv"), to_csv(refs_table(summary.seeds), prov));
  write_text_file(path_in(cfg, "summary.json"), sweep_summary_json(summary, prov));
  if (cfg.plots) sweep_plots(cfg, summary, prov);

  for (const auto& a : summary.per_lambda) {
    out << "lambda=" << format_double(a.lambda) << " " << to_string(a.start)
        << " validity=" << format_double(a.validity.mean)
        << " tvd=" << format_double(a.tvd_to_pstar.mean)
        << " fkl=" << format_double(a.fkl_from_pstar.mean)
        << " entropy=" << format_double(a.entropy.mean) << "\n";
  }
  out << "wrote " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_geometry(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  ensure_directory(cfg.out_dir);
  const Provenance prov{"geometry", cfg.seeds};

  const auto rows = geometry_profile(cfg.geometry_a1, cfg.geometry_lambdas);
  const auto betamu = beta_mu_table(cfg.betamu_a1, cfg.betamu_mu);
  const auto ill = ordering_illustration(cfg.ordering_lambdas);

  nlohmann::ordered_json j;
  j["provenance"] = {{"library", "klgeo"},
                     {"version", kLibraryVersion},
                     {"rng", std::string(SeededRng::kAlgorithm)},
                     {"seeds", cfg.seeds},
                     {"command", "geometry"}};
  auto& est = j["a1_estimates"] = nlohmann::ordered_json::array();
  for (auto seed : cfg.seeds) {
    const auto inst = make_toy_instance(seed, cfg.sweep_config());
    SeededRng rng(derive_seed(seed, 0xa1));
    const auto e = estimate_a1(inst.verifier, inst.base, cfg.a1_batch, rng);
    est.push_back({{"seed", seed},
                   {"batch", e.batch},
                   {"estimate", jnum(e.estimate)},
                   {"standard_error", jnum(e.standard_error)},
                   {"exact", jnum(e.exact)}});
  }
  auto& cand = j["ordering"]["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : ill.candidates) {
    cand.push_back({{"name", c.name},
                    {"validity", jnum(c.validity)},
                    {"tvd_to_pstar", jnum(c.tvd_to_pstar)},
                    {"kl_to_base", jnum(c.kl_to_base)}});
  }
  j["ordering"]["crossing_lambda_pi3_pi4"] = jnum(ill.crossing_lambda);
  j["ordering"]["crossing_lambda_numeric"] = jnum(ill.crossing_lambda_numeric);

  write_text_file(path_in(cfg, "config.echo"), config_echo(cfg, prov));
  write_text_file(path_in(cfg, "geometry.csv"), to_csv(geometry_table(rows), prov));
  write_text_file(path_in(cfg, "betamu.csv"), to_csv(betamu_csv(betamu), prov));
  write_text_file(path_in(cfg, "ordering.csv"), to_csv(ordering_table(ill), prov));
  write_text_file(path_in(cfg, "summary.json"), j.dump(2) + "\n");
  if (cfg.plots) geometry_plots(cfg, rows, ill, prov);

  for (const auto& r : betamu) {
    out << "A1=" << format_double(r.a1) << " mu=" << format_double(r.mu_target)
        << " lambda=" << format_double(r.lambda_required)
        << " beta=" << r.beta_required.to_string() << "\n";
  }
  out << "crossing lambda* (pi3, pi4) = " << format_double(ill.crossing_lambda) << "\n";
  out << "wrote " << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_check(const CheckContext& ctx, const std::string& prefix, std::ostream& out,
              std::ostream& err) {
  const auto results = run_checks(ctx, prefix);
  out << format_check_table(results);
  std::string failed;
  for (const auto& r : results) {
    if (!r.passed) failed += (failed.empty() ? "" : ", ") + r.name;
  }
  if (!failed.empty()) {
    err << "failed checks: " << failed << "\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exponential-family geometry of KL-regularized reward maximization"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::string seeds;
  std::string lambdas;
  std::string order;
  bool plots = false;
  bool warm_start = false;
  double tolerance = 0.0;
  std::size_t threads = 0;
  app.add_option("--config", config_path, "key=value run configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seeds", seeds, "seed list, e.g. 1,2,3 or 1..8");
  app.add_option("--lambdas", lambdas, "comma-separated lambda grid");
  app.add_option("--order", order, "policy family: bigram or full");
  app.add_flag("--plots", plots, "also write SVG plots");
  app.add_flag("--warm-start", warm_start, "add warm-started runs for every lambda");
  auto* tol_opt = app.add_option("--tolerance", tolerance, "override check tolerances");
  app.add_option("--threads", threads, "worker threads");

  auto* sweep = app.add_subcommand("sweep", "lambda sweep with reference policies");
  auto* geometry = app.add_subcommand("geometry", "closed-form geometry, beta/mu table, ordering");
  auto* check = app.add_subcommand("check", "run the invariant battery");
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    if (const char* env = std::getenv("KLGEO_SEED"); env != nullptr && *env != '\0') {
      try {
        set_config_value(cfg, "seeds", env);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("KLGEO_SEED: ") + e.what());
      }
    }
    if (!out_dir.empty()) set_config_value(cfg, "out", out_dir);
    if (!seeds.empty()) set_config_value(cfg, "seeds", seeds);
    if (!lambdas.empty()) set_config_value(cfg, "lambdas", lambdas);
    if (!order.empty()) set_config_value(cfg, "order", order);
    if (plots) cfg.plots = true;
    if (warm_start) cfg.warm_start = true;
    if (tol_opt->count() > 0) cfg.tolerance = tolerance;
    if (threads > 0) cfg.threads = threads;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sweep->parsed()) return cmd_sweep(cfg, out);
    if (geometry->parsed()) return cmd_geometry(cfg, out);
    CheckContext ctx;
    ctx.seed = cfg.seeds.front();
    ctx.tolerance = cfg.tolerance;
    ctx.gradcheck_h = cfg.gradcheck_h;
    ctx.gradcheck_policies = cfg.gradcheck_policies;
    if (check->parsed()) return cmd_check(ctx, "", out, err);
    if (gradcheck->parsed()) return cmd_check(ctx, "gradient-", out, err);
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace klgeo
