// gbnlab: experiments and diagnostics from the command line.
#include "gbn/bench/synth.hpp"
#include "gbn/cli/config.hpp"
#include "gbn/core/rng.hpp"
#include "gbn/graph/io.hpp"
#include "gbn/spectral/boundary.hpp"
#include "gbn/spectral/cylinder.hpp"
#include "gbn/spectral/report.hpp"
#include "gbn/train/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gbn;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Flags shared by the training verbs; each one set on the command line
// overrides the config file.
struct TrainFlags {
  std::string config;
  std::string out;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> seeds;
  Index layers = 0, hid = 0, epochs = 0;
  double lr = 0.0;
  std::string activation, norm;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_seeds = nullptr;
  CLI::Option* o_layers = nullptr;
  CLI::Option* o_hid = nullptr;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_lr = nullptr;

  void attach(CLI::App* cmd, const std::string& default_out) {
    out = default_out;
    cmd->add_option("--config", config, "JSON config file");
    cmd->add_option("--out", out, "output directory")->capture_default_str();
    cmd->add_option("--model", model, "gbn or gcn");
    o_seed = cmd->add_option("--seed", seed, "seed override");
    o_seeds = cmd->add_option("--seeds", seeds, "several seeds, one run each")->delimiter(',');
    o_layers = cmd->add_option("--layers", layers, "number of layers");
    o_hid = cmd->add_option("--hid", hid, "hidden dimension");
    o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
    o_lr = cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--activation", activation, "tanh, gelu, relu, ...");
    cmd->add_option("--norm", norm, "none, layer, batch");
  }

  json base(const std::string& task) const {
    json j = json::object();
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw UsageError("cannot read config " + config);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
      }
      if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
      // an echo from an earlier run carries its hash; overrides invalidate it
      if (any_override()) j.erase("config_hash");
    }
    if (!j.contains("task")) j["task"] = task;
    if (!model.empty()) j["model"] = model;
    if (o_seed->count()) {
      j["seed"] = seed;
      j.erase("seeds");
    }
    if (o_seeds->count()) j["seeds"] = seeds;
    if (o_layers->count()) j["n_layers"] = layers;
    if (o_hid->count()) j["hid_dim"] = hid;
    if (o_epochs->count()) j["epochs"] = epochs;
    if (o_lr->count()) j["lr"] = lr;
    if (!activation.empty()) j["activation"] = activation;
    if (!norm.empty()) j["norm"] = norm;
    return j;
  }

  bool any_override() const {
    return !model.empty() || o_seed->count() || o_seeds->count() || o_layers->count() || o_hid->count() ||
           o_epochs->count() || o_lr->count() || !activation.empty() || !norm.empty();
  }
};

using RunFn = std::function<RunReport(const TrainConfig&)>;

// One run per seed; per-seed directories when there is more than one.
int run_seeds(const ExperimentConfig& cfg, const fs::path& out, const std::string& metric, const RunFn& run,
              const std::string& label) {
  fs::create_directories(out);
  const json echo = config_echo(cfg);
  write_json(out / "config.json", echo);

  const std::size_t count = cfg.seeds.size();
  std::vector<double> finals(count);
  std::vector<Index> best(count);
  std::mutex io;
  parallel_for(static_cast<Index>(count), worker_threads(), [&](Index k) {
    TrainConfig t = cfg.train;
    t.seed = cfg.seeds[static_cast<std::size_t>(k)];
    const RunReport report = run(t);
    const fs::path dir = count == 1 ? out : out / ("seed_" + std::to_string(t.seed));
    fs::create_directories(dir);
    write_metrics_csv(dir / "metrics.csv", report);
    finals[static_cast<std::size_t>(k)] = report.final_test;
    best[static_cast<std::size_t>(k)] = report.best_epoch;
    std::lock_guard<std::mutex> lock(io);
    std::fprintf(stderr, "  seed %llu: %s %.6g (best epoch %lld, %.1fs)\n", static_cast<unsigned long long>(t.seed),
                 metric.c_str(), report.final_test, static_cast<long long>(report.best_epoch), report.wall_seconds);
  });

  const Summary s = summarize(finals, cfg.seeds, to_json(cfg));
  json summary = to_json(s);
  summary["metric"] = metric;
  summary["model"] = to_string(cfg.model);
  summary["best_epochs"] = best;
  write_json(out / "summary.json", summary);
  std::printf("%s %s: %s %.6g +- %.3g over %zu seed(s) [config %s] -> %s\n", label.c_str(),
              std::string(to_string(cfg.model)).c_str(), metric.c_str(), s.mean, s.std, count, s.config_hash.c_str(),
              out.string().c_str());
  return 0;
}

int cmd_transfer(const TrainFlags& f, const std::string& topology, Index distance, bool has_distance) {
  json j = f.base("transfer");
  if (!topology.empty()) j["topology"] = topology;
  if (has_distance) {
    j["distance"] = distance;
    if (!f.o_layers->count()) j["n_layers"] = distance;
  }
  const ExperimentConfig cfg = resolve_config(j);
  if (cfg.train.task != TaskKind::Transfer) throw ConfigError("/task", "expected transfer");
  auto run = [&](const TrainConfig& t) {
    const TransferSplits data = gen_transfer_split(cfg.topology, cfg.distance, cfg.counts, t.seed);
    return train_transfer(t, data, cfg.model).report;
  };
  const std::string label = "transfer " + std::string(to_string(cfg.topology)) + " n=" + std::to_string(cfg.distance);
  return run_seeds(cfg, f.out, "test_mse", run, label);
}

int cmd_classify(const TrainFlags& f, const std::string& edges, const std::string& features) {
  const ExperimentConfig cfg = resolve_config(f.base("classification"));
  if (cfg.train.task != TaskKind::Classification) throw ConfigError("/task", "expected classification");
  std::optional<LoadedGraph> loaded;
  if (!edges.empty()) {
    if (features.empty()) throw UsageError("--edges needs --features with a label column");
    loaded = load_graph(edges, GraphFormat::EdgeListWithFeatures, features);
    if (!loaded->labels) throw UsageError("feature file has no label column");
  }
  auto run = [&](const TrainConfig& t) {
    auto split_rng = rng_stream(t.seed, "data/split");
    if (loaded) {
      const NodeSplit split =
          random_split(loaded->graph.node_count(), cfg.train_fraction, cfg.val_fraction, split_rng);
      return train_classify(t, cfg.model, loaded->graph, loaded->features, *loaded->labels, split).report;
    }
    const SbmCase sbm = gen_sbm(cfg.sbm, t.seed);
    const NodeSplit split = random_split(sbm.graph.node_count(), cfg.train_fraction, cfg.val_fraction, split_rng);
    return train_classify(t, cfg.model, sbm.graph, sbm.features, sbm.labels, split).report;
  };
  return run_seeds(cfg, f.out, "test_accuracy", run, loaded ? "classify " + edges : std::string("classify sbm"));
}

int cmd_bottleneck(const TrainFlags& f, Index clique, Index path, bool has_clique, bool has_path) {
  json j = f.base("bottleneck");
  if (has_clique) j["clique_size"] = clique;
  if (has_path) j["path_len"] = path;
  const ExperimentConfig cfg = resolve_config(j);
  if (cfg.train.task != TaskKind::Bottleneck) throw ConfigError("/task", "expected bottleneck");
  auto run = [&](const TrainConfig& t) {
    const BottleneckSplits data = gen_bottleneck_split(cfg.clique_size, cfg.path_len, cfg.bottleneck_counts, t.seed);
    return train_bottleneck(t, cfg.model, data.train, data.val, data.test).report;
  };
  return run_seeds(cfg, f.out, "test_mae", run,
                   "bottleneck c=" + std::to_string(cfg.clique_size) + " l=" + std::to_string(cfg.path_len));
}

struct ProbeFlags {
  std::string model = "gcn";
  Index layers = 64;
  Index hid = 64;
  std::string activation = "tanh";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_energy(const ProbeFlags& f, const std::string& edges, const std::string& features) {
  Graph g;
  Matrix x0;
  if (!edges.empty()) {
    if (features.empty()) throw UsageError("--edges needs --features");
    LoadedGraph lg = load_graph(edges, GraphFormat::EdgeListWithFeatures, features);
    g = std::move(lg.graph);
    x0 = std::move(lg.features);
  } else {
    SbmCase sbm = gen_sbm({}, f.seed);
    g = std::move(sbm.graph);
    x0 = std::move(sbm.features);
  }
  ModelConfig mc;
  mc.kind = parse_model_kind(f.model);
  mc.in_dim = x0.cols();
  mc.hid_dim = f.hid;
  mc.out_dim = 1;
  mc.layers = f.layers;
  mc.activation = parse_activation(f.activation);
  auto init = rng_stream(f.seed, "init");
  Model model(mc, init);
  const GraphContext ctx = make_context(g);
  const std::vector<double> energy = energy_curve(model, ctx, x0, f.layers);

  fs::create_directories(f.out);
  std::ofstream csv(fs::path(f.out) / "energy.csv");
  csv << "layer,dirichlet_energy\n";
  char line[64];
  for (std::size_t k = 0; k < energy.size(); ++k) {
    std::snprintf(line, sizeof line, "%zu,%.17g\n", k + 1, energy[k]);
    csv << line;
  }
  std::printf("energy %s K=%lld: first %.6g last %.6g -> %s\n", f.model.c_str(), static_cast<long long>(f.layers),
              energy.front(), energy.back(), (fs::path(f.out) / "energy.csv").string().c_str());
  return 0;
}

int cmd_jacobian(const ProbeFlags& f, const std::string& topology, Index distance, bool frozen) {
  const Topology topo = parse_topology(topology);
  const TransferTask task = gen_transfer(topo, distance, f.seed);
  ModelConfig mc;
  mc.kind = parse_model_kind(f.model);
  mc.in_dim = 1;
  mc.hid_dim = f.hid;
  mc.out_dim = 1;
  mc.layers = f.layers;
  mc.activation = parse_activation(f.activation);
  auto init = rng_stream(f.seed, "init");
  Model model(mc, init);
  const GraphContext ctx = make_context(task.graph);
  Tape tape;
  const Matrix emb = model.forward(tape, ctx, tape.constant(task.features)).embedding.value();

  fs::create_directories(f.out);
  std::ofstream csv(fs::path(f.out) / "jacobian.csv");
  csv << "layer,jacobian_norm,bound,ratio\n";
  JacobianProbe last;
  char line[128];
  for (Index K = 1; K <= f.layers; ++K) {
    last = jacobian_probe(model, ctx, emb, task.target, task.source, K, frozen);
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g\n", static_cast<long long>(K), last.norm, last.bound,
                  last.ratio);
    csv << line;
  }
  std::printf("jacobian %s %s n=%lld K=%lld: |dx_t/dx_s| = %.6g, bound %.6g -> %s\n", f.model.c_str(),
              topology.c_str(), static_cast<long long>(distance), static_cast<long long>(f.layers), last.norm,
              last.bound, (fs::path(f.out) / "jacobian.csv").string().c_str());
  return 0;
}

Graph named_graph(const std::string& kind, Index nodes) {
  if (kind == "path") return path_graph(nodes);
  if (kind == "cycle") return cycle_graph(nodes);
  if (kind == "complete") return complete_graph(nodes);
  throw UsageError("unknown --graph '" + kind + "' (expected path, cycle, complete)");
}

BoundaryCondition parse_condition(const std::string& name, double alpha, double beta) {
  if (name == "dirichlet") return BoundaryCondition::dirichlet();
  if (name == "neumann") return BoundaryCondition::neumann();
  if (name == "robin") return BoundaryCondition::robin(alpha, beta);
  throw UsageError("unknown --condition '" + name + "' (expected dirichlet, neumann, robin)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gbnlab: boundary-conditioned message passing experiments"};
  app.require_subcommand(1, 1);

  TrainFlags transfer_flags, classify_flags, bottleneck_flags;
  std::string topology, edges, features;
  Index distance = 0;

  auto* transfer = app.add_subcommand("transfer", "graph transfer regression");
  transfer_flags.attach(transfer, "runs/transfer");
  transfer->add_option("--topology", topology, "line, ring, crossed-ring");
  auto* o_distance = transfer->add_option("--distance", distance, "source-target distance n");

  auto* classify = app.add_subcommand("classify", "node classification (SBM stand-in or files)");
  classify_flags.attach(classify, "runs/classify");
  classify->add_option("--edges", edges, "edge list");
  classify->add_option("--features", features, "feature CSV with a label column");

  Index clique = 5, path = 3;
  auto* bottleneck = app.add_subcommand("bottleneck", "two-clique swap case study");
  bottleneck_flags.attach(bottleneck, "runs/bottleneck");
  auto* o_clique = bottleneck->add_option("--clique", clique, "clique size");
  auto* o_path = bottleneck->add_option("--path", path, "intermediate path nodes");

  ProbeFlags energy_flags;
  energy_flags.out = "runs/energy";
  auto* energy = app.add_subcommand("energy", "Dirichlet energy per layer at initialisation");
  energy->add_option("--model", energy_flags.model)->capture_default_str();
  energy->add_option("--layers", energy_flags.layers)->capture_default_str();
  energy->add_option("--hid", energy_flags.hid)->capture_default_str();
  energy->add_option("--activation", energy_flags.activation)->capture_default_str();
  energy->add_option("--seed", energy_flags.seed)->capture_default_str();
  energy->add_option("--out", energy_flags.out)->capture_default_str();
  energy->add_option("--edges", edges, "edge list (default: SBM stand-in)");
  energy->add_option("--features", features, "feature CSV");

  ProbeFlags jac_flags;
  jac_flags.out = "runs/jacobian";
  jac_flags.layers = 10;
  jac_flags.hid = 16;
  std::string jac_topology = "ring";
  Index jac_distance = 10;
  bool live = false;
  auto* jacobian = app.add_subcommand("jacobian", "target/source Jacobian norm against the operator bound");
  jacobian->add_option("--model", jac_flags.model)->capture_default_str();
  jacobian->add_option("--layers", jac_flags.layers)->capture_default_str();
  jacobian->add_option("--hid", jac_flags.hid)->capture_default_str();
  jacobian->add_option("--activation", jac_flags.activation)->capture_default_str();
  jacobian->add_option("--seed", jac_flags.seed)->capture_default_str();
  jacobian->add_option("--out", jac_flags.out)->capture_default_str();
  jacobian->add_option("--topology", jac_topology)->capture_default_str();
  jacobian->add_option("--distance", jac_distance)->capture_default_str();
  jacobian->add_flag("--live", live, "let GBN coefficients follow the perturbed input");

  std::string graph_kind = "path", condition = "dirichlet", spec_out = "runs/spectral";
  Index nodes = 10;
  std::vector<Index> boundary;
  double alpha = 1.0, beta = 1.0;
  auto* spectral = app.add_subcommand("spectral", "Laplacian spectrum, optionally boundary-restricted");
  spectral->add_option("--graph", graph_kind, "path, cycle, complete")->capture_default_str();
  spectral->add_option("--nodes", nodes)->capture_default_str();
  spectral->add_option("--edges", edges, "edge list instead of --graph");
  spectral->add_option("--boundary", boundary, "boundary nodes, comma separated")->delimiter(',');
  spectral->add_option("--condition", condition, "dirichlet, neumann, robin")->capture_default_str();
  spectral->add_option("--alpha", alpha)->capture_default_str();
  spectral->add_option("--beta", beta)->capture_default_str();
  spectral->add_option("--out", spec_out)->capture_default_str();

  Index length = 20, ring = 6;
  std::string profile = "constant", cyl_out = "runs/cylinder";
  double eps0 = 1.0, slope = 0.1;
  std::vector<double> robin;
  auto* cylinder = app.add_subcommand("cylinder", "Dirichlet / closed / Neumann gaps of a discrete tube");
  cylinder->add_option("--length", length, "slices m")->capture_default_str();
  cylinder->add_option("--ring", ring, "cross-section nodes r")->capture_default_str();
  cylinder->add_option("--profile", profile, "constant or cosh")->capture_default_str();
  cylinder->add_option("--eps0", eps0)->capture_default_str();
  cylinder->add_option("--a", slope, "cosh rate")->capture_default_str();
  cylinder->add_option("--robin", robin, "alpha,beta")->delimiter(',')->expected(2);
  cylinder->add_option("--out", cyl_out)->capture_default_str();

  std::string gen_topology = "line", gen_out = "runs/data";
  Index gen_distance = 5;
  std::uint64_t gen_seed = 0;
  TransferCounts counts;
  auto* gen = app.add_subcommand("gen", "write a graph transfer dataset");
  gen->add_option("--topology", gen_topology)->capture_default_str();
  gen->add_option("--distance", gen_distance)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--train", counts.train)->capture_default_str();
  gen->add_option("--val", counts.val)->capture_default_str();
  gen->add_option("--test", counts.test)->capture_default_str();
  gen->add_option("--out", gen_out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*transfer) return cmd_transfer(transfer_flags, topology, distance, o_distance->count() > 0);
    if (*classify) return cmd_classify(classify_flags, edges, features);
    if (*bottleneck)
      return cmd_bottleneck(bottleneck_flags, clique, path, o_clique->count() > 0, o_path->count() > 0);
    if (*energy) return cmd_energy(energy_flags, edges, features);
    if (*jacobian) return cmd_jacobian(jac_flags, jac_topology, jac_distance, !live);
    if (*spectral) {
      const Graph g = edges.empty() ? named_graph(graph_kind, nodes) : load_edge_list(edges);
      Spectrum rep = boundary.empty()
                         ? eig_sym(normalized_laplacian(g).dense())
                         : boundary_restricted_spectrum(g, boundary, parse_condition(condition, alpha, beta));
      fs::create_directories(spec_out);
      json j = to_json(rep);
      j["nodes"] = g.node_count();
      j["boundary"] = boundary;
      write_json(fs::path(spec_out) / "spectrum.json", j);
      std::printf("spectral %s: gap %.10g (%zu eigenvalues) -> %s\n", rep.condition.tag().c_str(), rep.spectral_gap,
                  static_cast<std::size_t>(rep.eigenvalues.size()), (fs::path(spec_out) / "spectrum.json").c_str());
      return 0;
    }
    if (*cylinder) {
      RadiusProfile rp;
      if (profile == "constant") {
        rp = RadiusProfile::constant(eps0);
      } else if (profile == "cosh") {
        rp = RadiusProfile::cosh(eps0, slope);
      } else {
        throw UsageError("unknown --profile '" + profile + "' (expected constant, cosh)");
      }
      std::optional<BoundaryCondition> rb;
      if (!robin.empty()) rb = BoundaryCondition::robin(robin[0], robin[1]);
      const CylinderGaps gaps = cylinder_gap_experiment(length, ring, rp, rb);
      json j = {{"length", length},          {"ring", ring},         {"profile", profile},
                {"eps0", eps0},              {"a", slope},           {"dirichlet", gaps.dirichlet},
                {"closed", gaps.closed},     {"neumann", gaps.neumann}, {"margin", gaps.margin},
                {"ordered", gaps.ordered}};
      if (gaps.robin) j["robin"] = *gaps.robin;
      fs::create_directories(cyl_out);
      write_json(fs::path(cyl_out) / "cylinder.json", j);
      std::printf("cylinder m=%lld r=%lld %s: D %.6g >= closed %.6g >= N %.6g : %s -> %s\n",
                  static_cast<long long>(length), static_cast<long long>(ring), profile.c_str(), gaps.dirichlet,
                  gaps.closed, gaps.neumann, gaps.ordered ? "ordered" : "NOT ordered",
                  (fs::path(cyl_out) / "cylinder.json").c_str());
      return 0;
    }
    if (*gen) {
      const TransferSplits splits = gen_transfer_split(parse_topology(gen_topology), gen_distance, counts, gen_seed);
      write_transfer_dataset(gen_out, splits);
      std::printf("gen %s n=%lld: %lld/%lld/%lld graphs -> %s\n", gen_topology.c_str(),
                  static_cast<long long>(gen_distance), static_cast<long long>(counts.train),
                  static_cast<long long>(counts.val), static_cast<long long>(counts.test), gen_out.c_str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error at %s\n", e.what());
    return 1;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
