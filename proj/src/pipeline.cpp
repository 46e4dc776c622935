#include "ofm/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "ofm/common.hpp"
#include "ofm/manifest.hpp"
#include "ofm/nn.hpp"

namespace ofm {

namespace fs = std::filesystem;

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty()) return name;
  return (fs::path(dir) / name).string();
}

namespace {

std::string canon(const std::string& p) { return fs::weakly_canonical(fs::path(p)).string(); }

PhantomKind phantom_kind_for(const std::string& symmetry) {
  if (symmetry == "D2") return PhantomKind::D2;
  if (symmetry != "C1") throw std::invalid_argument("unknown symmetry: " + symmetry);
  return PhantomKind::Asymmetric;
}

// Median angular error of the model over images [lo, hi) of the dataset.
double split_median(Model& model, const Dataset& ds, const SymmetryGroup& group, int lo,
                    int hi) {
  require(0 <= lo && lo < hi && hi <= static_cast<int>(ds.images.size()),
          "split_median: bad range");
  std::vector<Image> imgs(ds.images.begin() + lo, ds.images.begin() + hi);
  std::vector<InferResult> res = infer(model, imgs);
  std::vector<Quat> pq(res.size()), tq(res.size());
  for (size_t i = 0; i < res.size(); ++i) {
    pq[i] = res[i].q;
    tq[i] = ds.truth.records[static_cast<size_t>(lo) + i].q;
  }
  return median_angular_error(pq, tq, group);
}

double median_of(std::vector<double> v) {
  require(!v.empty(), "median_of: empty");
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

Dataset simulate_dataset(const RunConfig& cfg) {
  Volume vol = make_phantom(cfg.sim.side, cfg.sim.pixel_size, phantom_kind_for(cfg.sim.symmetry),
                            mix_seed(cfg.sim_seed, 1));
  return generate_dataset(vol, cfg.sim, mix_seed(cfg.sim_seed, 2));
}

PairSet pairs_for_config(const RunConfig& cfg, const OrientTable& truth, int n_train) {
  if (cfg.pairs.scheme == PairScheme::Random)
    return random_pairs(n_train, cfg.pairs.fraction, cfg.pairs.seed);
  std::vector<Quat> qs(static_cast<size_t>(n_train));
  for (int i = 0; i < n_train; ++i)
    qs[static_cast<size_t>(i)] = truth.records[static_cast<size_t>(i)].q;
  return stratified_pairs(qs, cfg.pairs.candidate_factor * n_train, cfg.pairs.bins,
                          cfg.pairs.seed);
}

void run_simulate(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Dataset ds = simulate_dataset(cfg);
  const std::string cfg_path = join_path(out_dir, artifact::kConfig);
  const std::string stack_path = join_path(out_dir, artifact::kStack);
  const std::string orient_path = join_path(out_dir, artifact::kOrient);
  write_run_config(cfg_path, cfg);
  write_stack_mrc(stack_path, ds.images);
  ds.truth.write_csv(orient_path);
  write_artifact_manifest(stack_path, "simulate", cfg.seed, {cfg_path});
  write_artifact_manifest(orient_path, "simulate", cfg.seed, {cfg_path});
}

Dataset load_dataset_dir(const std::string& data_dir) {
  RunConfig cfg = read_run_config(join_path(data_dir, artifact::kConfig));
  Dataset ds;
  ds.images = read_stack_mrc(join_path(data_dir, artifact::kStack));
  ds.truth = OrientTable::read_csv(join_path(data_dir, artifact::kOrient));
  require(ds.images.size() == ds.truth.records.size(),
          "load_dataset_dir: stack and orientation table disagree on image count");
  require(!ds.images.empty(), "load_dataset_dir: empty stack");
  ds.symmetry = cfg.sim.symmetry;
  ds.pixel_size = ds.images[0].pixel_size;
  return ds;
}

void run_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Dataset ds = load_dataset_dir(data_dir);
  require(ds.images[0].side == cfg.encoder.input_side,
          "run_train: dataset image side does not match encoder input_side");
  SplitSizes sp = split_sizes(static_cast<int>(ds.images.size()));
  PairSet pairs = pairs_for_config(cfg, ds.truth, sp.train);

  Model model = build_encoder(cfg.encoder, cfg.init_seed);
  History hist = train(model, ds, pairs, cfg.train);

  const std::string cfg_path = join_path(out_dir, artifact::kConfig);
  const std::string model_path = join_path(out_dir, artifact::kModel);
  const std::string hist_path = join_path(out_dir, artifact::kHistory);
  const std::string pairs_path = join_path(out_dir, artifact::kPairs);
  write_run_config(cfg_path, cfg);
  save_model(model_path, model);
  hist.write_csv(hist_path);
  write_pairs_csv(pairs_path, pairs);

  const std::vector<std::string> inputs = {join_path(data_dir, artifact::kStack),
                                           join_path(data_dir, artifact::kOrient), cfg_path};
  write_artifact_manifest(model_path, "train", cfg.seed, inputs);
  write_artifact_manifest(hist_path, "train", cfg.seed, inputs);
  write_artifact_manifest(pairs_path, "train", cfg.seed, inputs);
}

void run_infer(const std::string& data_dir, const std::string& model_path,
               const std::string& out_dir) {
  require(canon(out_dir) != canon(data_dir), "run_infer: out_dir must differ from data_dir");
  fs::create_directories(out_dir);
  Dataset ds = load_dataset_dir(data_dir);
  Model model = load_model(model_path);
  std::vector<InferResult> res = infer(model, ds.images);

  OrientTable preds;
  preds.records.resize(res.size());
  for (size_t i = 0; i < res.size(); ++i) {
    OrientRecord& r = preds.records[i];
    r.index = static_cast<long>(i);
    r.q = res[i].q;
    if (res[i].stats) {
      r.lambda_max = res[i].stats->lambda_max;
      r.trace_stat = res[i].stats->trace_stat;
      r.degenerate = res[i].stats->degenerate;
    }
  }
  const std::string out_path = join_path(out_dir, artifact::kOrient);
  preds.write_csv(out_path);
  write_artifact_manifest(out_path, "infer", model.init_seed,
                          {model_path, join_path(data_dir, artifact::kStack)});
}

void run_filter(const std::string& pred_csv, const std::string& stat, double keep_fraction,
                const std::string& out_dir) {
  OrientTable t = OrientTable::read_csv(pred_csv);
  require(t.has_uncertainty_columns(), "run_filter: predictions lack uncertainty columns");
  bool use_trace = false;
  if (stat == "trace_stat")
    use_trace = true;
  else if (stat != "lambda_max")
    throw std::invalid_argument("run_filter: unknown statistic " + stat);

  std::vector<double> s(t.records.size());
  std::vector<bool> degen(t.records.size());
  for (size_t i = 0; i < t.records.size(); ++i) {
    const OrientRecord& r = t.records[i];
    s[i] = use_trace ? *r.trace_stat : *r.lambda_max;
    degen[i] = *r.degenerate;
  }
  std::vector<bool> keep = quantile_keep_mask(s, degen, keep_fraction);

  fs::create_directories(out_dir);
  const std::string out_path = join_path(out_dir, artifact::kOrient);
  require(canon(out_path) != canon(pred_csv), "run_filter: output would overwrite the input");
  OrientTable kept;
  for (size_t i = 0; i < t.records.size(); ++i)
    if (keep[i]) kept.records.push_back(t.records[i]);
  kept.write_csv(out_path);
  write_artifact_manifest(out_path, "filter", 0, {pred_csv});
}

void run_reconstruct(const std::string& data_dir, const std::string& orient_csv,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<Image> images = read_stack_mrc(join_path(data_dir, artifact::kStack));
  OrientTable t = OrientTable::read_csv(orient_csv);
  require(!t.records.empty(), "run_reconstruct: empty orientation table");

  // The table may be a filtered subset, so gather images by record index.
  std::vector<Image> subset;
  std::vector<Quat> quats;
  std::vector<std::array<double, 2>> shifts;
  subset.reserve(t.records.size());
  for (const OrientRecord& r : t.records) {
    require(r.index >= 0 && r.index < static_cast<long>(images.size()),
            "run_reconstruct: orientation index out of range");
    subset.push_back(images[static_cast<size_t>(r.index)]);
    quats.push_back(r.q);
    shifts.push_back({r.shift_x, r.shift_y});
  }
  Volume v = reconstruct(subset, quats, shifts);

  const std::string out_path = join_path(out_dir, artifact::kVolume);
  write_volume_mrc(out_path, v);
  write_artifact_manifest(out_path, "reconstruct", 0,
                          {join_path(data_dir, artifact::kStack), orient_csv});
}

EvalSummary run_evaluate(const std::string& data_dir, const std::string& pred_csv,
                         const std::string& volume_path, const std::string& reference_path,
                         const std::string& out_dir) {
  // Refuse inputs whose recorded hashes no longer match what is on disk.
  verify_artifact(pred_csv);
  verify_artifact(join_path(data_dir, artifact::kOrient));
  if (!volume_path.empty()) verify_artifact(volume_path);
  if (!reference_path.empty()) verify_artifact(reference_path);

  RunConfig dcfg = read_run_config(join_path(data_dir, artifact::kConfig));
  OrientTable truth = OrientTable::read_csv(join_path(data_dir, artifact::kOrient));
  OrientTable preds = OrientTable::read_csv(pred_csv);
  require(!preds.records.empty(), "run_evaluate: empty prediction table");
  const SymmetryGroup group = SymmetryGroup::from_name(dcfg.sim.symmetry);

  std::vector<Quat> pq, tq;
  pq.reserve(preds.records.size());
  for (const OrientRecord& r : preds.records) {
    require(r.index >= 0 && r.index < static_cast<long>(truth.records.size()),
            "run_evaluate: prediction index out of range");
    pq.push_back(r.q);
    tq.push_back(truth.records[static_cast<size_t>(r.index)].q);
  }
  std::vector<double> errors(pq.size());
  for (size_t i = 0; i < pq.size(); ++i) errors[i] = symmetric_distance(pq[i], tq[i], group);

  EvalSummary sum;
  sum.n_images = static_cast<long>(pq.size());
  sum.median_err = median_angular_error(pq, tq, group);

  fs::create_directories(out_dir);
  Csv report;
  report.header = {"metric", "value"};
  report.rows.push_back({"n_images", std::to_string(sum.n_images)});
  report.rows.push_back({"median_angular_error", format_g9(sum.median_err)});

  std::vector<std::string> inputs = {pred_csv, join_path(data_dir, artifact::kOrient)};

  if (preds.has_uncertainty_columns() && preds.records.size() >= 10) {
    std::vector<DispersionStats> stats(preds.records.size());
    for (size_t i = 0; i < preds.records.size(); ++i) {
      stats[i].lambda_max = *preds.records[i].lambda_max;
      stats[i].trace_stat = *preds.records[i].trace_stat;
      stats[i].degenerate = *preds.records[i].degenerate;
    }
    UncertaintyReport ur = uncertainty_report(errors, stats);
    sum.spearman_lambda_max = ur.spearman_lambda_max;
    sum.spearman_trace = ur.spearman_trace;
    const std::string scatter_path = join_path(out_dir, artifact::kScatter);
    ur.scatter.write_file(scatter_path);
    write_artifact_manifest(scatter_path, "evaluate", dcfg.seed, inputs);
    if (ur.spearman_lambda_max)
      report.rows.push_back({"spearman_lambda_max", format_g9(*ur.spearman_lambda_max)});
    if (ur.spearman_trace)
      report.rows.push_back({"spearman_trace_stat", format_g9(*ur.spearman_trace)});
  }

  if (!volume_path.empty() || !reference_path.empty()) {
    require(!volume_path.empty() && !reference_path.empty(),
            "run_evaluate: FSC needs both a volume and a reference");
    Volume v = read_volume_mrc(volume_path);
    Volume ref = read_volume_mrc(reference_path);
    FscCurve curve = fsc(v, ref);
    const std::string fsc_path = join_path(out_dir, artifact::kFsc);
    write_fsc_csv(fsc_path, curve);
    ResolutionResult rr = resolution_at(curve, ref.pixel_size);
    sum.resolution = rr;
    report.rows.push_back({"resolution_angstrom", format_g9(rr.angstrom)});
    report.rows.push_back({"resolution_at_limit", rr.at_limit ? "1" : "0"});
    inputs.push_back(volume_path);
    inputs.push_back(reference_path);
    write_artifact_manifest(fsc_path, "evaluate", dcfg.seed, inputs);
  }

  const std::string report_path = join_path(out_dir, artifact::kReport);
  report.write_file(report_path);
  write_artifact_manifest(report_path, "evaluate", dcfg.seed, inputs);
  return sum;
}

TrendPoint run_trend_point(const RunConfig& cfg) {
  Dataset ds = simulate_dataset(cfg);
  const SymmetryGroup group = SymmetryGroup::from_name(ds.symmetry);
  SplitSizes sp = split_sizes(static_cast<int>(ds.images.size()));
  PairSet pairs = pairs_for_config(cfg, ds.truth, sp.train);
  Model model = build_encoder(cfg.encoder, cfg.init_seed);
  History hist = train(model, ds, pairs, cfg.train);
  require(!hist.rows.empty(), "run_trend_point: zero-epoch run");

  TrendPoint tp;
  tp.train_med = hist.rows.back().train_med_err;
  tp.val_med = hist.rows.back().val_med_err;
  tp.test_med = split_median(model, ds, group, sp.train + sp.val,
                             static_cast<int>(ds.images.size()));
  return tp;
}

void run_ablate(const std::string& axis, const RunConfig& base,
                const std::vector<uint64_t>& seeds, const std::string& out_dir) {
  require(!seeds.empty(), "run_ablate: need at least one seed");

  struct Variant {
    std::string name;
    EncoderConfig enc;
    TrainStyle style;
  };
  std::vector<Variant> variants;
  auto add = [&](const std::string& name) {
    variants.push_back({name, base.encoder, base.train.style});
    return &variants.back();
  };
  if (axis == "head") {
    for (HeadKind k : {HeadKind::Quat, HeadKind::SixD, HeadKind::Qcqp})
      add(head_kind_name(k))->enc.head = k;
  } else if (axis == "style") {
    for (TrainStyle s : {TrainStyle::Single, TrainStyle::Siamese, TrainStyle::SiameseAux})
      add(train_style_name(s))->style = s;
  } else if (axis == "blur") {
    add("none")->enc.blur = BlurMode::None;
    add("gaussian")->enc.blur = BlurMode::Gaussian;
  } else if (axis == "pool") {
    for (PoolKind p : {PoolKind::Gem, PoolKind::GlobalMax, PoolKind::MaxPlusAvg})
      add(pool_kind_name(p))->enc.pool = p;
  } else {
    throw std::invalid_argument("run_ablate: unknown axis " + axis);
  }

  Csv table;
  table.header = {"variant", "seed", "train_med_err", "val_med_err", "test_med_err"};
  std::vector<std::vector<TrendPoint>> points(variants.size());

  for (uint64_t seed : seeds) {
    RunConfig cfg = resolve_seeds(base, seed);
    Dataset ds = simulate_dataset(cfg);
    const SymmetryGroup group = SymmetryGroup::from_name(ds.symmetry);
    SplitSizes sp = split_sizes(static_cast<int>(ds.images.size()));
    PairSet pairs = pairs_for_config(cfg, ds.truth, sp.train);

    for (size_t vi = 0; vi < variants.size(); ++vi) {
      Model model = build_encoder(variants[vi].enc, cfg.init_seed);
      TrainConfig tc = cfg.train;
      tc.style = variants[vi].style;
      History hist = train(model, ds, pairs, tc);
      require(!hist.rows.empty(), "run_ablate: zero-epoch run");

      TrendPoint tp;
      tp.train_med = hist.rows.back().train_med_err;
      tp.val_med = hist.rows.back().val_med_err;
      tp.test_med = split_median(model, ds, group, sp.train + sp.val,
                                 static_cast<int>(ds.images.size()));
      points[vi].push_back(tp);
      table.rows.push_back({variants[vi].name, std::to_string(seed), format_g9(tp.train_med),
                            format_g9(tp.val_med), format_g9(tp.test_med)});
    }
  }

  for (size_t vi = 0; vi < variants.size(); ++vi) {
    std::vector<double> tr, va, te;
    for (const TrendPoint& tp : points[vi]) {
      tr.push_back(tp.train_med);
      va.push_back(tp.val_med);
      te.push_back(tp.test_med);
    }
    table.rows.push_back({variants[vi].name, "median", format_g9(median_of(tr)),
                          format_g9(median_of(va)), format_g9(median_of(te))});
  }

  fs::create_directories(out_dir);
  const std::string cfg_path = join_path(out_dir, artifact::kConfig);
  write_run_config(cfg_path, base);
  const std::string report_path = join_path(out_dir, artifact::kReport);
  table.write_file(report_path);
  write_artifact_manifest(report_path, "ablate", base.seed, {cfg_path});
}

}  // namespace ofm
