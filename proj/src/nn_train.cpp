#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "ofm/common.hpp"
#include "ofm/csv.hpp"
#include "ofm/loss_schedule.hpp"
#include "ofm/nn.hpp"
#include "ofm/recon_eval.hpp"
#include "ofm/uncertainty.hpp"

namespace ofm {

namespace {

// Per-parameter Adam state, aligned with Model::params() order.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  long t = 0;

  explicit AdamState(const std::vector<Param*>& ps) {
    for (Param* p : ps) {
      m.emplace_back(p->v.size(), 0.0);
      v.emplace_back(p->v.size(), 0.0);
    }
  }

  void step(std::vector<Param*>& ps, double lr, double beta1, double beta2, double eps) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t k = 0; k < ps.size(); ++k) {
      Param* p = ps[k];
      if (!p->trainable) continue;
      double* mv = m[k].data();
      double* vv = v[k].data();
      for (size_t i = 0; i < p->v.size(); ++i) {
        const double g = p->g[i];
        mv[i] = beta1 * mv[i] + (1.0 - beta1) * g;
        vv[i] = beta2 * vv[i] + (1.0 - beta2) * g * g;
        p->v[i] -= lr * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + eps);
      }
    }
  }
};

std::vector<Quat> predict_range(Model& m, const std::vector<MultiChannel>& cache, int lo,
                                int hi) {
  std::vector<Quat> out;
  out.reserve(static_cast<size_t>(hi - lo));
  const int chunk = 256;
  for (int s = lo; s < hi; s += chunk) {
    const int e = std::min(hi, s + chunk);
    std::vector<int> idx(static_cast<size_t>(e - s));
    std::iota(idx.begin(), idx.end(), s);
    Tensor batch = make_input_batch(cache, idx);
    std::vector<std::unique_ptr<LayerCtx>> ctxs;
    Tensor raw = m.forward_raw(batch, ctxs, false, nullptr);
    HeadOut ho = apply_head(m.cfg.head, raw);
    out.insert(out.end(), ho.q.begin(), ho.q.end());
  }
  return out;
}

CurriculumWeights epoch_weights(const TrainConfig& tcfg, int epoch) {
  switch (tcfg.style) {
    case TrainStyle::Single: return {0.5, 0.0};  // mean per-image regression
    case TrainStyle::Siamese: return {0.0, 1.0};
    case TrainStyle::SiameseAux:
      return tcfg.curriculum ? curriculum_weights(epoch, tcfg.epochs)
                             : CurriculumWeights{0.5, 0.5};
  }
  throw std::invalid_argument("train: bad style enum");
}

}  // namespace

History train(Model& model, const Dataset& data, const PairSet& pairs,
              const TrainConfig& tcfg) {
  const int n = static_cast<int>(data.images.size());
  require(n >= 6, "train: dataset too small");
  require(static_cast<int>(data.truth.records.size()) == n, "train: truth size mismatch");
  require(tcfg.epochs >= 0 && tcfg.batch_size >= 1 && tcfg.lr_max > 0,
          "train: bad training config");
  const SplitSizes sp = split_sizes(n);
  require(sp.train >= 2 && sp.val >= 1, "train: split too small");

  const bool pairwise = tcfg.style != TrainStyle::Single;
  std::vector<std::pair<int, int>> units;
  if (pairwise) {
    require(!pairs.pairs.empty(), "train: pair styles need a non-empty pair set");
    for (const auto& pr : pairs.pairs)
      require(pr.first >= 0 && pr.second >= 0 && pr.first < sp.train && pr.second < sp.train,
              "train: pair index outside the train split");
    units = pairs.pairs;
  }
  const long n_units = pairwise ? static_cast<long>(units.size()) : sp.train;
  const long steps_per_epoch = (n_units + tcfg.batch_size - 1) / tcfg.batch_size;

  History hist;
  if (tcfg.epochs == 0) return hist;

  const SymmetryGroup group = SymmetryGroup::from_name(data.symmetry);
  std::vector<Quat> truth(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) truth[static_cast<size_t>(i)] = data.truth.records[static_cast<size_t>(i)].q;

  // encoder input stage: mask + standardize each image, then the blur bank
  std::vector<Image> pp(data.images.size());
  for (size_t i = 0; i < data.images.size(); ++i) pp[i] = preprocess(data.images[i]);
  const auto cache = blur_cache(pp, model.cfg.blur, model.cfg.blur_filters);

  // Fixed validation probe pairs, reused every epoch so val_loss is comparable.
  std::vector<std::pair<int, int>> val_probes;
  {
    Rng vr(mix_seed(tcfg.seed, 555));
    const int lo = sp.train, hi = sp.train + sp.val;
    for (int k = 0; k < tcfg.val_pair_count; ++k) {
      int a = lo + static_cast<int>(vr.below(static_cast<uint64_t>(hi - lo)));
      int b = lo + static_cast<int>(vr.below(static_cast<uint64_t>(hi - lo)));
      if (a == b) b = lo + (b - lo + 1) % (hi - lo);
      val_probes.emplace_back(a, b);
    }
  }

  std::vector<Param*> ps = model.params();
  AdamState adam(ps);
  Rng mask_rng(mix_seed(tcfg.seed, 77));
  OneCycleConfig occ;
  occ.total_steps = static_cast<long>(tcfg.epochs) * steps_per_epoch;
  occ.lr_max = tcfg.lr_max;

  long step = 0;
  for (int e = 0; e < tcfg.epochs; ++e) {
    const CurriculumWeights w = epoch_weights(tcfg, e);
    Rng order_rng(mix_seed(tcfg.seed, 1000 + static_cast<uint64_t>(e)));
    std::vector<long> order(static_cast<size_t>(n_units));
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);

    double loss_sum = 0.0;
    double last_lr = 0.0;
    for (long s0 = 0; s0 < n_units; s0 += tcfg.batch_size, ++step) {
      const long s1 = std::min(n_units, s0 + tcfg.batch_size);
      const int bsz = static_cast<int>(s1 - s0);
      model.begin_step();
      model.zero_grads();

      double batch_loss = 0.0;
      if (pairwise) {
        std::vector<int> ia(static_cast<size_t>(bsz)), ib(static_cast<size_t>(bsz));
        for (long k = s0; k < s1; ++k) {
          ia[static_cast<size_t>(k - s0)] = units[static_cast<size_t>(order[static_cast<size_t>(k)])].first;
          ib[static_cast<size_t>(k - s0)] = units[static_cast<size_t>(order[static_cast<size_t>(k)])].second;
        }
        std::vector<std::unique_ptr<LayerCtx>> ca, cb;
        Tensor rawa = model.forward_raw(make_input_batch(cache, ia), ca, true, &mask_rng);
        Tensor rawb = model.forward_raw(make_input_batch(cache, ib), cb, true, nullptr);
        HeadOut ha = apply_head(model.cfg.head, rawa);
        HeadOut hb = apply_head(model.cfg.head, rawb);

        std::vector<PairTerm> terms(static_cast<size_t>(bsz));
        std::vector<Vec4> ga(static_cast<size_t>(bsz), Vec4{0, 0, 0, 0});
        std::vector<Vec4> gb(static_cast<size_t>(bsz), Vec4{0, 0, 0, 0});
        for (int k = 0; k < bsz; ++k) {
          const Quat &qa = ha.q[static_cast<size_t>(k)], &qb = hb.q[static_cast<size_t>(k)];
          const Quat &ta = truth[static_cast<size_t>(ia[static_cast<size_t>(k)])];
          const Quat &tb = truth[static_cast<size_t>(ib[static_cast<size_t>(k)])];
          terms[static_cast<size_t>(k)] = {qa, qb, ta, tb};
          if (w.beta1 != 0.0) {
            const Vec4 ra = regression_loss_grad(qa, ta);
            const Vec4 rb = regression_loss_grad(qb, tb);
            for (int c = 0; c < 4; ++c) {
              ga[static_cast<size_t>(k)][static_cast<size_t>(c)] += w.beta1 * ra[static_cast<size_t>(c)];
              gb[static_cast<size_t>(k)][static_cast<size_t>(c)] += w.beta1 * rb[static_cast<size_t>(c)];
            }
          }
          if (w.beta2 != 0.0) {
            const PairGrad pg = distance_loss_grad(qa, qb, ta, tb);
            for (int c = 0; c < 4; ++c) {
              ga[static_cast<size_t>(k)][static_cast<size_t>(c)] += w.beta2 * pg.gi[static_cast<size_t>(c)];
              gb[static_cast<size_t>(k)][static_cast<size_t>(c)] += w.beta2 * pg.gj[static_cast<size_t>(c)];
            }
          }
          for (int c = 0; c < 4; ++c) {
            ga[static_cast<size_t>(k)][static_cast<size_t>(c)] /= bsz;
            gb[static_cast<size_t>(k)][static_cast<size_t>(c)] /= bsz;
          }
        }
        batch_loss = full_loss(terms, w);
        model.backward_raw(head_backward(model.cfg.head, rawa, ha, ga), ca);
        model.backward_raw(head_backward(model.cfg.head, rawb, hb, gb), cb);
      } else {
        std::vector<int> idx(static_cast<size_t>(bsz));
        for (long k = s0; k < s1; ++k)
          idx[static_cast<size_t>(k - s0)] = static_cast<int>(order[static_cast<size_t>(k)]);
        std::vector<std::unique_ptr<LayerCtx>> ctxs;
        Tensor raw = model.forward_raw(make_input_batch(cache, idx), ctxs, true, &mask_rng);
        HeadOut ho = apply_head(model.cfg.head, raw);
        std::vector<Vec4> gq(static_cast<size_t>(bsz));
        for (int k = 0; k < bsz; ++k) {
          const Quat& t = truth[static_cast<size_t>(idx[static_cast<size_t>(k)])];
          batch_loss += regression_loss(ho.q[static_cast<size_t>(k)], t);
          Vec4 g = regression_loss_grad(ho.q[static_cast<size_t>(k)], t);
          for (double& c : g) c /= bsz;
          gq[static_cast<size_t>(k)] = g;
        }
        batch_loss /= bsz;
        model.backward_raw(head_backward(model.cfg.head, raw, ho, gq), ctxs);
      }

      if (!std::isfinite(batch_loss))
        throw DegenerateRepresentation("train: non-finite loss at epoch " + std::to_string(e) +
                                       " step " + std::to_string(step));
      // weight decay on the data gradient, keras-style l2 penalty
      if (model.cfg.l2 > 0.0)
        for (Param* p : ps)
          if (p->decay)
            for (size_t i = 0; i < p->v.size(); ++i) p->g[i] += 2.0 * model.cfg.l2 * p->v[i];

      const SchedulePoint spt = one_cycle_at(step, occ);
      last_lr = spt.lr;
      adam.step(ps, spt.lr, spt.momentum, tcfg.adam_beta2, tcfg.adam_eps);
      loss_sum += batch_loss * static_cast<double>(bsz);
    }

    EpochRow row;
    row.epoch = e + 1;
    row.train_loss = loss_sum / static_cast<double>(n_units);
    row.lr = last_lr;

    const std::vector<Quat> ptrain = predict_range(model, cache, 0, sp.train);
    const std::vector<Quat> pval = predict_range(model, cache, sp.train, sp.train + sp.val);
    row.train_med_err = median_angular_error(
        ptrain, std::vector<Quat>(truth.begin(), truth.begin() + sp.train), group);
    row.val_med_err = median_angular_error(
        pval, std::vector<Quat>(truth.begin() + sp.train, truth.begin() + sp.train + sp.val),
        group);

    std::vector<PairTerm> vterms;
    vterms.reserve(val_probes.size());
    for (const auto& pr : val_probes)
      vterms.push_back({pval[static_cast<size_t>(pr.first - sp.train)],
                        pval[static_cast<size_t>(pr.second - sp.train)],
                        truth[static_cast<size_t>(pr.first)], truth[static_cast<size_t>(pr.second)]});
    row.val_loss = full_loss(vterms, w);
    hist.rows.push_back(row);
  }
  return hist;
}

std::vector<InferResult> infer(Model& model, const std::vector<Image>& images) {
  require(!images.empty(), "infer: no images");
  for (const Image& img : images)
    require(img.side == model.cfg.input_side, "infer: image side does not match the model");
  // same input stage as training: mask + standardize, then the blur bank
  std::vector<Image> pp(images.size());
  for (size_t i = 0; i < images.size(); ++i) pp[i] = preprocess(images[i]);
  const auto cache = blur_cache(pp, model.cfg.blur, model.cfg.blur_filters);
  std::vector<InferResult> out;
  out.reserve(images.size());
  const int chunk = 256;
  for (int s = 0; s < static_cast<int>(images.size()); s += chunk) {
    const int e = std::min(static_cast<int>(images.size()), s + chunk);
    std::vector<int> idx(static_cast<size_t>(e - s));
    std::iota(idx.begin(), idx.end(), s);
    Tensor batch = make_input_batch(cache, idx);
    std::vector<std::unique_ptr<LayerCtx>> ctxs;
    Tensor raw = model.forward_raw(batch, ctxs, false, nullptr);
    HeadOut ho = apply_head(model.cfg.head, raw);
    for (int k = 0; k < e - s; ++k) {
      InferResult r;
      r.q = ho.q[static_cast<size_t>(k)];
      if (model.cfg.head == HeadKind::Qcqp)
        r.stats = dispersion_from_spectrum(ho.qcqp[static_cast<size_t>(k)].eig.values);
      out.push_back(r);
    }
  }
  return out;
}

void History::write_csv(const std::string& path) const {
  Csv csv;
  csv.header = {"epoch", "train_loss", "val_loss", "train_med_err", "val_med_err", "lr"};
  for (const EpochRow& r : rows)
    csv.rows.push_back({std::to_string(r.epoch), format_g9(r.train_loss), format_g9(r.val_loss),
                        format_g9(r.train_med_err), format_g9(r.val_med_err), format_g9(r.lr)});
  csv.write_file(path);
}

History History::read_csv(const std::string& path) {
  const Csv csv = Csv::read_file(path);
  for (const char* c : {"epoch", "train_loss", "val_loss", "train_med_err", "val_med_err", "lr"})
    require(csv.has_col(c), "history: missing column");
  History h;
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    EpochRow r;
    r.epoch = static_cast<int>(csv.integer(i, csv.col("epoch")));
    r.train_loss = csv.num(i, csv.col("train_loss"));
    r.val_loss = csv.num(i, csv.col("val_loss"));
    r.train_med_err = csv.num(i, csv.col("train_med_err"));
    r.val_med_err = csv.num(i, csv.col("val_med_err"));
    r.lr = csv.num(i, csv.col("lr"));
    h.rows.push_back(r);
  }
  return h;
}

}  // namespace ofm
