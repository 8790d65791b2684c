#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "so3kit/adaptive.hpp"
#include "so3kit/bench.hpp"
#include "so3kit/dataset.hpp"
#include "so3kit/diagnostics.hpp"
#include "so3kit/io.hpp"
#include "so3kit/model.hpp"
#include "so3kit/rng.hpp"
#include "so3kit/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace so3kit;

namespace {

// exit code 1
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// exit code 2
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string out_dir = "out";
  std::vector<int> seeds = {0, 1, 2};
  std::vector<int> n_sweep = {8, 16, 32, 64};
  std::string grid = "repulsion";
  FieldType carrier = field_type(RepKind::Quotient, 3);
  ModelConfig model;
  int dataset_n_per_class = 25;
  double dataset_jitter = 0.02;
  int dataset_seed = 0;
  int train_epochs = 60;
  double train_lr = 1e-3;
  int train_batch = 16;
  int bench_channels = 8;
  int bench_spatial = 1024;
};

void require_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string("unknown key \"") + key + "\" in " + where);
  }
}

// a lone number is accepted as a one-element sweep
std::vector<int> as_int_list(const json& j) {
  if (j.is_number()) return {j.get<int>()};
  return j.get<std::vector<int>>();
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  require_keys(doc, "run config",
               {"out_dir", "seeds", "n_sweep", "grid", "carrier", "model", "dataset", "train",
                "bench"});
  RunConfig c;
  try {
    if (doc.contains("out_dir")) c.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("seeds")) c.seeds = as_int_list(doc["seeds"]);
    if (doc.contains("n_sweep")) c.n_sweep = as_int_list(doc["n_sweep"]);
    if (doc.contains("grid")) c.grid = doc["grid"].get<std::string>();
    if (doc.contains("carrier")) c.carrier = field_type_from_json(doc["carrier"].dump());
    if (doc.contains("model")) c.model = config_from_json(doc["model"].dump());
    if (doc.contains("dataset")) {
      const auto& d = doc["dataset"];
      require_keys(d, "dataset", {"n_per_class", "jitter", "seed"});
      if (d.contains("n_per_class")) c.dataset_n_per_class = d["n_per_class"].get<int>();
      if (d.contains("jitter")) c.dataset_jitter = d["jitter"].get<double>();
      if (d.contains("seed")) c.dataset_seed = d["seed"].get<int>();
    }
    if (doc.contains("train")) {
      const auto& t = doc["train"];
      require_keys(t, "train", {"epochs", "lr", "batch"});
      if (t.contains("epochs")) c.train_epochs = t["epochs"].get<int>();
      if (t.contains("lr")) c.train_lr = t["lr"].get<double>();
      if (t.contains("batch")) c.train_batch = t["batch"].get<int>();
    }
    if (doc.contains("bench")) {
      const auto& b = doc["bench"];
      require_keys(b, "bench", {"channels", "spatial"});
      if (b.contains("channels")) c.bench_channels = b["channels"].get<int>();
      if (b.contains("spatial")) c.bench_spatial = b["spatial"].get<int>();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }

  if (c.out_dir.empty()) throw ConfigError("out_dir must not be empty");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  for (const int n : c.n_sweep)
    if (n < 1) throw ConfigError("n_sweep entries must be positive");
  if (c.n_sweep.empty()) throw ConfigError("n_sweep must not be empty");
  if (c.grid != "repulsion" && c.grid != "cubic")
    throw ConfigError("grid must be \"repulsion\" or \"cubic\"");
  if (c.dataset_n_per_class < 1) throw ConfigError("dataset.n_per_class must be at least 1");
  if (c.dataset_jitter < 0) throw ConfigError("dataset.jitter must be nonnegative");
  if (c.train_epochs < 1 || c.train_batch < 1 || !(c.train_lr > 0))
    throw ConfigError("train block values out of range");
  if (c.bench_channels < 1 || c.bench_spatial < 1) throw ConfigError("bench block values out of range");
  return c;
}

// `--set a.b=v` assigns into the config document; the value is parsed as JSON
// when possible, comma lists become arrays, anything else stays a string
void apply_override(json& doc, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value: " + kv);
  const std::string path = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);

  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    if (raw.find(',') != std::string::npos) {
      try {
        value = json::parse("[" + raw + "]");
      } catch (const json::exception&) {
        value = raw;
      }
    } else {
      value = raw;
    }
  }

  json* node = &doc;
  std::string rest = path;
  for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
    const std::string head = rest.substr(0, dot);
    if (head.empty()) throw ConfigError("--set key has an empty segment: " + kv);
    node = &(*node)[head];
    rest = rest.substr(dot + 1);
  }
  if (rest.empty()) throw ConfigError("--set key has an empty segment: " + kv);
  (*node)[rest] = value;
}

RunConfig load_run_config(const std::string& config_path, const std::vector<std::string>& sets) {
  json doc = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config file " + config_path);
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
  }
  for (const auto& kv : sets) apply_override(doc, kv);
  RunConfig c = run_config_from_json(doc);
  if (const char* env = std::getenv("SO3KIT_OUT_DIR"); env && *env) c.out_dir = env;
  return c;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void run_cells(int n_cells, int parallel, const std::function<void(int)>& cell) {
  if (parallel <= 1) {
    for (int i = 0; i < n_cells; ++i) cell(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex m;
  std::vector<std::thread> pool;
  const int workers = std::min(parallel, n_cells);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_cells; i = next.fetch_add(1)) {
        try {
          cell(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Grid make_grid(const RunConfig& c, int n, int seed) {
  if (c.grid == "cubic") return cubic_group();
  const Space space = c.carrier.kind == RepKind::Quotient ? Space::Sphere : Space::Group;
  return repulsion_grid(space, n, 500, 0.01, std::uint64_t(seed));
}

std::string carrier_tag(const FieldType& t) {
  return (t.kind == RepKind::Quotient ? std::string("quotient_L") : std::string("regular_L")) +
         std::to_string(t.L);
}

double pair_distance(const Grid& g, int i, int j) {
  if (g.space == Space::Sphere)
    return std::acos(std::clamp(g.points[i].dot(g.points[j]), -1.0, 1.0));
  return rotation_angle(compose(inverse(g.rotations[i]), g.rotations[j]));
}

int cmd_grid(const RunConfig& c) {
  std::ostringstream csv;
  csv << "space,n,min_nn,mean_nn,max_nn\n";
  std::vector<int> sweep = c.n_sweep;
  if (c.grid == "cubic") sweep = {24};
  for (const int n : sweep) {
    const Grid g = make_grid(c, n, c.seeds.front());
    write_file(fs::path(c.out_dir) / ("grid_" + std::to_string(n) + ".json"), grid_to_json(g));

    double lo = 0.0, hi = 0.0, sum = 0.0;
    if (g.n() > 1) {
      lo = M_PI * 2;
      for (int i = 0; i < g.n(); ++i) {
        double nn = M_PI * 2;
        for (int j = 0; j < g.n(); ++j)
          if (j != i) nn = std::min(nn, pair_distance(g, i, j));
        lo = std::min(lo, nn);
        hi = std::max(hi, nn);
        sum += nn;
      }
      sum /= g.n();
    }
    check_finite(sum, "grid spacing");
    csv << (g.space == Space::Sphere ? "sphere" : "group") << ',' << g.n() << ',' << fmt17(lo)
        << ',' << fmt17(sum) << ',' << fmt17(hi) << '\n';
  }
  write_file(fs::path(c.out_dir) / "spacing.csv", csv.str());
  return 0;
}

int cmd_diag(const RunConfig& c, int parallel) {
  const std::vector<int> sweep = c.grid == "cubic" ? std::vector<int>{24} : c.n_sweep;
  std::vector<OrthoReport> reports(sweep.size() * c.seeds.size());
  run_cells(int(reports.size()), parallel, [&](int i) {
    const int n = sweep[i / c.seeds.size()];
    const int seed = c.seeds[i % c.seeds.size()];
    reports[i] = ortho_report(sampling_matrix(c.carrier, make_grid(c, n, seed), true));
  });

  const std::string tag = carrier_tag(c.carrier) + "_" + c.grid;
  std::ostringstream csv;
  csv << "model,n,metric,mean,std\n";
  for (size_t k = 0; k < sweep.size(); ++k) {
    const auto metric = [&](const char* name, auto pick) {
      double mean = 0.0;
      for (size_t s = 0; s < c.seeds.size(); ++s) mean += pick(reports[k * c.seeds.size() + s]);
      mean /= double(c.seeds.size());
      double var = 0.0;
      for (size_t s = 0; s < c.seeds.size(); ++s) {
        const double d = pick(reports[k * c.seeds.size() + s]) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / double(c.seeds.size()));
      check_finite(mean, "orthogonality report");
      check_finite(sd, "orthogonality report");
      csv << tag << ',' << sweep[k] << ',' << name << ',' << fmt17(mean) << ',' << fmt17(sd)
          << '\n';
    };
    metric("eps1", [](const OrthoReport& r) { return r.eps1; });
    metric("eps2_normalized", [](const OrthoReport& r) { return r.eps2_normalized; });
    metric("eps2_unnormalized", [](const OrthoReport& r) { return r.eps2_unnormalized; });
  }
  write_file(fs::path(c.out_dir) / "ortho.csv", csv.str());
  return 0;
}

// layer-level equivariance error of the two nonlinearities, averaged over
// rotations (and spatial points for the per-point variant)
double fixed_layer_error(const RunConfig& c, int n, int seed) {
  const auto S = sampling_matrix(c.carrier, make_grid(c, n, seed), true);
  Rng rng(std::uint64_t(seed) * 0x9e3779b97f4a7c15ull + 1);
  Eigen::MatrixXd fhat(4, c.carrier.F);
  for (Eigen::Index i = 0; i < fhat.size(); ++i) fhat(i) = rng.normal();

  const auto layer = [&](const Eigen::MatrixXd& x) {
    return fourier_nonlinearity(S, x, Activation::Elu, FtMode::PInv);
  };
  const auto cubic = cubic_group();
  double total = 0.0;
  for (const auto& g : cubic.rotations)
    total += equivariance_error(
        layer, fhat, [&](const Eigen::MatrixXd& x) { return rho_apply(c.carrier, g, x); },
        [&](const Eigen::MatrixXd& y) { return rho_apply(c.carrier, g, y); });
  return total / double(cubic.rotations.size());
}

double adaptive_layer_error(const RunConfig& c, int n, int seed) {
  const int points = 4, channels = 4;
  Rng rng(std::uint64_t(seed) * 0x2545f4914f6cdd1dull + 11);
  FieldBundle x;
  std::vector<int> in_mult;
  for (int l = 0; l <= c.carrier.L; ++l) {
    Eigen::MatrixXd f(points, 2 * l + 1);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.normal();
    x.fields.push_back(f);
    in_mult.push_back(1);
  }
  std::vector<Eigen::MatrixXd> fhat(points);
  for (auto& f : fhat) {
    f.resize(channels, c.carrier.F);
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = rng.normal();
  }
  const auto gen = build_generator(in_mult, c.carrier, n, std::uint64_t(seed));

  const auto apply = [&](const FieldBundle& b, const std::vector<Eigen::MatrixXd>& fh) {
    return adaptive_nonlinearity(generate_A(gen, b), fh, Activation::Elu);
  };
  const auto base = apply(x, fhat);

  double total = 0.0;
  const int n_rot = 20;
  for (int t = 0; t < n_rot; ++t) {
    const Rotation g = random_haar(rng);
    auto fhat_rot = fhat;
    for (auto& f : fhat_rot) f = rho_apply(c.carrier, g, f);
    const auto moved = apply(rotate_bundle(x, g), fhat_rot);

    double per_point = 0.0;
    for (int p = 0; p < points; ++p) {
      const Eigen::MatrixXd expect = rho_apply(c.carrier, g, base[p]);
      const double den = std::max(expect.norm(), moved[p].norm());
      per_point += den == 0.0 ? 0.0 : (expect - moved[p]).norm() / den;
    }
    total += per_point / points;
  }
  return total / n_rot;
}

int cmd_equivariance(const RunConfig& c, int parallel) {
  const size_t ns = c.seeds.size();
  std::vector<double> fixed(c.n_sweep.size() * ns), adaptive(c.n_sweep.size() * ns);
  run_cells(int(fixed.size()), parallel, [&](int i) {
    const int n = c.n_sweep[i / ns];
    const int seed = c.seeds[i % ns];
    fixed[i] = fixed_layer_error(c, n, seed);
    adaptive[i] = adaptive_layer_error(c, n, seed);
  });

  std::ostringstream csv;
  csv << "model,n,metric,mean,std\n";
  for (size_t k = 0; k < c.n_sweep.size(); ++k) {
    const auto emit = [&](const char* name, const std::vector<double>& vals) {
      double mean = 0.0;
      for (size_t s = 0; s < ns; ++s) mean += vals[k * ns + s];
      mean /= double(ns);
      double var = 0.0;
      for (size_t s = 0; s < ns; ++s) {
        const double d = vals[k * ns + s] - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / double(ns));
      check_finite(mean, "equivariance sweep");
      csv << name << ',' << c.n_sweep[k] << ",equivariance_error," << fmt17(mean) << ','
          << fmt17(sd) << '\n';
    };
    emit("fixed", fixed);
    emit("adaptive", adaptive);
  }
  write_file(fs::path(c.out_dir) / "equivariance.csv", csv.str());
  return 0;
}

int cmd_train(const RunConfig& c, int parallel) {
  const Dataset data =
      gen_tetris(c.dataset_n_per_class, c.dataset_jitter, std::uint64_t(c.dataset_seed));

  struct Cell {
    NonlinKind kind;
    int n = 0;  // 0 when the kind has no sample grid
    int seed = 0;
  };
  std::vector<Cell> cells;
  for (const auto kind : {NonlinKind::FourierFixed, NonlinKind::Adaptive})
    for (const int n : c.n_sweep)
      for (const int seed : c.seeds) cells.push_back({kind, n, seed});
  for (const auto kind : {NonlinKind::Norm, NonlinKind::Gated})
    for (const int seed : c.seeds) cells.push_back({kind, 0, seed});

  TrainOptions opt;
  opt.epochs = c.train_epochs;
  opt.lr = c.train_lr;
  opt.batch = c.train_batch;

  std::vector<TrainResult> results(cells.size());
  std::vector<ModelConfig> configs(cells.size());
  run_cells(int(cells.size()), parallel, [&](int i) {
    ModelConfig mc = c.model;
    mc.nonlin = cells[i].kind;
    if (cells[i].n > 0) mc.n_samples = cells[i].n;
    mc.seed = cells[i].seed;
    configs[i] = mc;
    results[i] = train(mc, data, opt);
    for (const double loss : results[i].epoch_loss)
      if (!std::isfinite(loss)) throw NumericalError("training loss diverged");
  });

  std::ostringstream csv;
  csv << "model,n,seed,epoch,split,accuracy,invariance_error,wall_ms\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    const std::string name = nonlin_kind_name(cells[i].kind);
    for (const auto& row : results[i].history) {
      check_finite(row.accuracy, "metrics");
      check_finite(row.invariance_error, "metrics");
      csv << name << ',' << cells[i].n << ',' << cells[i].seed << ',' << row.epoch << ','
          << row.split << ',' << fmt17(row.accuracy) << ',' << fmt17(row.invariance_error) << ','
          << fmt17(row.wall_ms) << '\n';
    }
    const std::string ckpt = "ckpt_" + name + "_n" + std::to_string(cells[i].n) + "_seed" +
                             std::to_string(cells[i].seed) + ".json";
    write_file(fs::path(c.out_dir) / ckpt, checkpoint_to_json(configs[i], results[i].weights));
  }
  write_file(fs::path(c.out_dir) / "metrics.csv", csv.str());
  return 0;
}

int cmd_bench(const RunConfig& c) {
  const auto rows = bench_nonlinearity(c.carrier, c.bench_channels, c.bench_spatial, c.n_sweep,
                                       std::uint64_t(c.seeds.front()));
  for (const auto& r : rows) check_finite(r.wall_ms, "bench timings");
  write_file(fs::path(c.out_dir) / "bench.csv", bench_csv(rows));

  json fits = json::object();
  for (const std::string layer : {"fixed", "adaptive"}) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (r.layer == layer) {
        xs.push_back(r.n);
        ys.push_back(r.wall_ms);
      }
    if (xs.size() < 2) continue;
    const auto fit = fit_line(xs, ys);
    check_finite(fit.slope, "bench fit");
    fits[layer] = {{"slope_ms_per_sample", fit.slope},
                   {"intercept_ms", fit.intercept},
                   {"r2", fit.r2}};
  }
  write_file(fs::path(c.out_dir) / "bench_fit.json", fits.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmonic analysis toolkit for rotation-equivariant point-cloud models"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  int parallel = 1;
  std::string command;
  for (const auto& [name, help] :
       std::vector<std::pair<std::string, std::string>>{
           {"grid", "write sample grids and nearest-neighbour spacing stats"},
           {"diag", "orthogonality metrics over the grid-size sweep"},
           {"equivariance", "layer equivariance errors over the grid-size sweep"},
           {"train", "train the classifier sweep and write checkpoints plus metrics"},
           {"bench", "time the nonlinearities over the grid-size sweep"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--set", sets, "override config entries, key=value");
    if (name != "bench")
      sub->add_option("--parallel", parallel, "run independent sweep cells on this many threads");
    sub->callback([&command, name = name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const RunConfig c = load_run_config(config_path, sets);
    fs::create_directories(c.out_dir);
    if (command == "grid") return cmd_grid(c);
    if (command == "diag") return cmd_diag(c, parallel);
    if (command == "equivariance") return cmd_equivariance(c, parallel);
    if (command == "train") return cmd_train(c, parallel);
    if (command == "bench") return cmd_bench(c);
    throw ConfigError("unknown command");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  }
}
