// Command line front end: verify, sample, enumerate, oracle, check-sde.
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ymloop/config.hpp"
#include "ymloop/u1_oracle.hpp"
#include "ymloop/verifier.hpp"

using json = nlohmann::ordered_json;
using namespace ymloop;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitStatistical = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

class Emitter {
public:
  explicit Emitter(const RunConfig& cfg) : cfg_(cfg) {
    if (cfg.output != "-") {
      file_.open(cfg.output);
      if (!file_) throw ConfigError("output: cannot open '" + cfg.output + "'");
    }
    if (!cfg.csv.empty()) {
      csv_.open(cfg.csv);
      if (!csv_) throw ConfigError("csv: cannot open '" + cfg.csv + "'");
      csv_ << "record,group,n,beta,s,quantity,mean,std_error,n_effective,passed\n";
    }
    json conf = json::object();
    const auto kv = to_key_values(cfg);
    for (const auto& key : config_keys()) conf[key] = kv.at(key);
    config_ = std::move(conf);
  }

  json record(const std::string& kind) const {
    json r;
    r["record"] = kind;
    r["version"] = YMLOOP_VERSION;
    r["seed"] = cfg_.seed;
    r["config"] = config_;
    return r;
  }

  void write(const json& r) { out() << r.dump() << '\n'; }

  void csv_row(const std::string& kind, double beta, const std::string& s, const std::string& quantity, double mean,
               double se, double n_eff, bool passed) {
    if (!csv_.is_open()) return;
    auto quote = [](const std::string& x) { return "\"" + x + "\""; };
    csv_ << kind << ',' << to_string(cfg_.group) << ',' << cfg_.n << ',' << format_double(beta) << ',' << quote(s)
         << ',' << quote(quantity) << ',' << format_double(mean) << ',' << format_double(se) << ','
         << format_double(n_eff) << ',' << (passed ? "true" : "false") << '\n';
  }

private:
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

  const RunConfig& cfg_;
  std::ofstream file_, csv_;
  json config_;
};

json estimate_json(const MCEstimate& e) {
  return json{{"mean_re", e.mean.real()},        {"mean_im", e.mean.imag()},
              {"std_error", e.std_error},        {"std_error_imag", e.std_error_imag},
              {"n_effective", e.n_effective},    {"n_samples", e.n_samples},
              {"batch_count", e.batch_count}};
}

std::string seq_text(const Lattice& lat, const LoopSequence& s) {
  return s.empty() ? std::string("<empty>") : format_sequence(lat, s);
}

int run_verify(const RunConfig& cfg, Emitter& em) {
  const GroupSpec g = cfg.group_spec();
  const Lattice lat = cfg.lattice();
  bool all_passed = true;
  for (double beta : cfg.betas) {
    for (const auto& text : cfg.sequences) {
      const LoopSequence s = parse_sequence(lat, text);
      VerifyOptions opt{cfg.chain(beta), cfg.extrapolate};
      const CellVerdict v = verify_cell(g, beta, s, lat, opt, cfg.seeds, cfg.n_sigma);
      json r = em.record("master_equation");
      r["group"] = g.name();
      r["N"] = g.n();
      r["beta"] = beta;
      r["s"] = format_sequence(lat, s);
      r["lhs_prefactor"] = v.runs.front().lhs_prefactor.str();
      json seeds = json::array();
      json runs = json::array();
      for (const auto& rep : v.runs) {
        seeds.push_back(rep.seed);
        json run;
        run["seed"] = rep.seed;
        run["chain_seeds"] = rep.chain_seeds;
        run["scheme"] = to_string(rep.scheme);
        run["step"] = rep.step;
        run["extrapolated"] = rep.extrapolated;
        run["acceptance"] = rep.acceptance;
        run["lhs_mean"] = rep.lhs.mean.real();
        run["lhs_se"] = rep.lhs.std_error;
        json terms = json::array();
        for (const auto& t : rep.terms) {
          json row{{"name", op_set_name(t.op)},
                   {"coefficient", t.coefficient.str()},
                   {"coefficient_value", t.coefficient.value(beta)},
                   {"set_size", t.set_size}};
          row["estimate"] = estimate_json(t.estimate);
          terms.push_back(row);
        }
        run["terms"] = terms;
        run["residual"] = rep.residual;
        run["residual_imag"] = rep.residual_imag;
        run["residual_sigma"] = rep.residual_sigma;
        run["n_effective"] = rep.n_effective;
        run["n_samples"] = rep.n_samples;
        run["within_n_sigma"] = rep.within(cfg.n_sigma);
        runs.push_back(run);
        em.csv_row("master_equation", beta, r["s"], "residual", rep.residual, rep.residual_sigma, rep.n_effective,
                   rep.within(cfg.n_sigma));
      }
      r["seeds"] = seeds;
      r["runs"] = runs;
      r["residual_exceedances"] = v.residual_exceedances;
      r["passed"] = v.passed;
      em.write(r);
      all_passed = all_passed && v.passed;
    }
  }
  json summary = em.record("summary");
  summary["command"] = "verify";
  summary["passed"] = all_passed;
  em.write(summary);
  return all_passed ? kExitPass : kExitStatistical;
}

int run_sample(const RunConfig& cfg, Emitter& em) {
  const GroupSpec g = cfg.group_spec();
  const Lattice lat = cfg.lattice();
  std::vector<LoopSequence> seqs;
  for (const auto& text : cfg.sequences) seqs.push_back(parse_sequence(lat, text));
  std::vector<std::string> names = stationarity_observables();
  for (const auto& s : seqs) names.push_back("phi(" + format_sequence(lat, s) + ")");
  const int n_basket = static_cast<int>(stationarity_observables().size());

  for (double beta : cfg.betas) {
    SequenceEvaluator eval(lat, g.n());
    for (const auto& s : seqs) eval.add_family(std::span<const LoopSequence>(&s, 1));
    auto observe = [&](const Configuration& q, std::span<std::complex<double>> out) {
      evaluate_stationarity_observables(q, beta, out.first(n_basket));
      eval.evaluate(q, out.subspan(n_basket));
    };
    const ChainConfig chain = cfg.chain(beta);
    const ChainResult res = run_chain(chain, lat, ActionParams{beta, g}, static_cast<int>(names.size()), observe);
    json r = em.record("sample");
    r["group"] = g.name();
    r["N"] = g.n();
    r["beta"] = beta;
    r["scheme"] = to_string(chain.scheme);
    r["step"] = chain.step;
    r["acceptance"] = res.acceptance;
    r["chain_seeds"] = res.chain_seeds;
    json est = json::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
      json row{{"name", names[k]}};
      row.update(estimate_json(res.estimates[k]));
      est.push_back(row);
      em.csv_row("sample", beta, "", names[k], res.estimates[k].mean.real(), res.estimates[k].std_error,
                 res.estimates[k].n_effective, true);
    }
    r["estimates"] = est;
    em.write(r);
  }
  return kExitPass;
}

int run_enumerate(const RunConfig& cfg, Emitter& em) {
  const Lattice lat = cfg.lattice();
  for (const auto& text : cfg.sequences) {
    const LoopSequence s = parse_sequence(lat, text);
    const OperationSets sets = build_operation_sets(s, lat);
    const LoopStats st = lengths_and_windings(s);
    json r = em.record("operation_sets");
    r["s"] = format_sequence(lat, s);
    r["m"] = s.size();
    r["length"] = st.length;
    r["ell"] = st.ell;
    json counts = json::object();
    json members = json::object();
    for (int k = 0; k < kNumOpSets; ++k) {
      const OpSet op = static_cast<OpSet>(k);
      const auto& set = sets[op];
      counts[std::string(op_set_name(op))] = set.size();
      // distinct results with multiplicities, in order of first appearance
      std::vector<std::pair<const LoopSequence*, int>> distinct;
      for (const auto& sp : set) {
        auto it = std::find_if(distinct.begin(), distinct.end(), [&](const auto& d) { return *d.first == sp; });
        if (it == distinct.end()) distinct.emplace_back(&sp, 1);
        else ++it->second;
      }
      json list = json::array();
      for (const auto& [sp, mult] : distinct) list.push_back(json{{"s", seq_text(lat, *sp)}, {"multiplicity", mult}});
      members[std::string(op_set_name(op))] = list;
      em.csv_row("operation_sets", 0.0, r["s"], std::string(op_set_name(op)), static_cast<double>(set.size()), 0.0,
                 0.0, true);
    }
    r["counts"] = counts;
    r["members"] = members;
    em.write(r);
  }
  return kExitPass;
}

int run_oracle(const RunConfig& cfg, Emitter& em) {
  const Lattice lat = cfg.lattice();
  const QuadratureSpec spec = gauge_fix(lat, cfg.n_points, cfg.gauge_root);
  for (double beta : cfg.betas) {
    for (const auto& text : cfg.sequences) {
      const LoopSequence s = parse_sequence(lat, text);
      const auto phi = exact_phi_u1(lat, beta, s, spec);
      json r = em.record("oracle");
      r["s"] = format_sequence(lat, s);
      r["beta"] = beta;
      r["phi_re"] = phi.real();
      r["phi_im"] = phi.imag();
      r["n_points"] = spec.n_points;
      r["free_edges"] = spec.free_edges.size();
      em.write(r);
      em.csv_row("oracle", beta, r["s"], "phi", phi.real(), 0.0, 0.0, true);
    }
  }
  return kExitPass;
}

json entrywise_json(const ReplicateVerdict& v, std::span<const EntrywiseReport> reps) {
  json r{{"replicates", v.replicates},
         {"worst_entry_exceedances", v.worst_entry_exceedances},
         {"worst_entry", v.worst_label},
         {"passed", v.passed}};
  json worst = json::array();
  for (const auto& rep : reps) worst.push_back(rep.worst_z);
  r["worst_z"] = worst;
  return r;
}

Matrix random_test_matrix(const GroupSpec& g, Rng& rng) {
  Matrix m(g.n(), g.n());
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < g.n(); ++j) m(i, j) = g.is_real() ? Scalar(rng.normal(), 0.0) : Scalar(rng.normal(), rng.normal());
  return m;
}

int run_check_sde(const RunConfig& cfg, Emitter& em) {
  const GroupSpec g = cfg.group_spec();
  const Lattice lat = cfg.lattice();
  bool all_passed = true;
  constexpr int kReplicates = 3;

  {
    std::vector<EntrywiseReport> reps;
    for (int k = 0; k < kReplicates; ++k) {
      Rng rng(derive_seed(cfg.seed, 0xc0a0 + k));
      reps.push_back(covariance_check(g, cfg.sde_samples, rng, cfg.n_sigma));
    }
    const auto v = combine_replicates(reps);
    json r = em.record("covariance");
    r["group"] = g.name();
    r.update(entrywise_json(v, reps));
    em.write(r);
    em.csv_row("covariance", 0.0, "", "worst_entry_exceedances", v.worst_entry_exceedances, 0.0, 0.0, v.passed);
    all_passed = all_passed && v.passed;
  }
  {
    const double defect = basis_identity_defect(g);
    json r = em.record("basis_identity");
    r["group"] = g.name();
    r["c_g"] = group_constants(g).c_g.str();
    r["defect"] = defect;
    r["passed"] = defect <= 1e-10;
    em.write(r);
    all_passed = all_passed && defect <= 1e-10;
  }
  Rng mrng(derive_seed(cfg.seed, 0x3a61c));
  for (int pair = 0; pair < cfg.magic_pairs; ++pair) {
    const Matrix m = random_test_matrix(g, mrng);
    const Matrix m2 = random_test_matrix(g, mrng);
    std::vector<EntrywiseReport> reps;
    for (int k = 0; k < kReplicates; ++k) {
      Rng rng(derive_seed(cfg.seed, 0x3a610000 + 16 * pair + k));
      reps.push_back(magic_formula_check(m, m2, g, cfg.sde_h, cfg.sde_samples, rng, cfg.n_sigma));
    }
    const auto v = combine_replicates(reps);
    json r = em.record("magic_formula");
    r["group"] = g.name();
    r["pair"] = pair;
    r.update(entrywise_json(v, reps));
    em.write(r);
    all_passed = all_passed && v.passed;
  }
  for (double beta : cfg.betas) {
    const auto rep = stationarity_check(g, beta, lat, cfg.chain(Scheme::metropolis, beta),
                                        cfg.chain(Scheme::langevin, beta), cfg.n_sigma);
    json r = em.record("stationarity");
    r["group"] = g.name();
    r["beta"] = beta;
    r["h"] = rep.h;
    json rows = json::array();
    for (const auto& row : rep.rows) {
      rows.push_back(json{{"observable", row.observable},
                          {"metropolis", estimate_json(row.metropolis)},
                          {"langevin_h", estimate_json(row.langevin_h)},
                          {"langevin_half_h", estimate_json(row.langevin_half)},
                          {"z_half", row.z_half},
                          {"z_full", row.z_full},
                          {"allowance", row.allowance},
                          {"bias_shrinks", row.bias_shrinks},
                          {"passed", row.passed}});
      em.csv_row("stationarity", beta, "", row.observable, row.langevin_half.mean.real() - row.metropolis.mean.real(),
                 std::hypot(row.langevin_half.std_error, row.metropolis.std_error), row.metropolis.n_effective,
                 row.passed);
    }
    r["rows"] = rows;
    r["passed"] = rep.passed;
    em.write(r);
    all_passed = all_passed && rep.passed;
  }
  json summary = em.record("summary");
  summary["command"] = "check-sde";
  summary["passed"] = all_passed;
  em.write(summary);
  return all_passed ? kExitPass : kExitStatistical;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice Yang-Mills master loop equation toolkit"};
  app.set_version_flag("--version", std::string(YMLOOP_VERSION));
  std::string command;
  std::string config_path;
  bool print_config = false;
  app.add_option("command", command, "verify | sample | enumerate | oracle | check-sde");
  app.add_option("-c,--config", config_path, "key = value configuration file");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  std::map<std::string, std::string> flags;
  for (const auto& key : config_keys()) {
    if (key == "command") continue;
    app.add_option("--" + key, flags[key], "overrides '" + key + "' from the config file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  RunConfig cfg;
  try {
    std::map<std::string, std::string> values;
    if (!config_path.empty()) values = parse_key_values(read_file(config_path));
    for (const auto& [key, value] : flags)
      if (app.count("--" + key) > 0) values[key] = value;
    if (!command.empty()) values["command"] = command;
    cfg = make_config(values);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (print_config) {
    std::cout << to_config_text(cfg);
    return kExitPass;
  }

  try {
    Emitter em(cfg);
    switch (cfg.command) {
      case Command::verify: return run_verify(cfg, em);
      case Command::sample: return run_sample(cfg, em);
      case Command::enumerate: return run_enumerate(cfg, em);
      case Command::oracle: return run_oracle(cfg, em);
      case Command::check_sde: return run_check_sde(cfg, em);
    }
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InsufficientSamples& e) {
    std::cerr << "statistics: " << e.what() << '\n';
    return kExitStatistical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitPass;
}
