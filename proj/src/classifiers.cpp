#include "locpred/classifiers.hpp"

#include "locpred/json_eigen.hpp"
#include "locpred/rng.hpp"
#include "locpred/stats.hpp"
#include "locpred/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace locpred::classifiers {

namespace {

struct KindInfo {
  Kind kind;
  const char* name;
};

constexpr KindInfo kKinds[] = {
    {Kind::NaiveBayes, "naive-bayes"},
    {Kind::LogisticRegression, "logistic-regression"},
    {Kind::KNearestNeighbors, "k-nearest-neighbors"},
    {Kind::DecisionTree, "decision-tree"},
    {Kind::RandomForest, "random-forest"},
    {Kind::AdaBoost, "adaptive-boosting"},
    {Kind::LinearSvm, "linear-svm"},
    {Kind::RbfSvm, "rbf-svm"},
    {Kind::ExtraTrees, "extra-trees"},
    {Kind::Bagging, "bagging"},
    {Kind::GradientBoosting, "gradient-boosting"},
    {Kind::SgdLinear, "sgd-linear"},
};

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string kind_name(Kind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  throw DomainError("unknown classifier kind");
}

Kind parse_kind(std::string_view name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw DomainError("unknown classifier kind '" + std::string(name) + "'");
}

std::vector<Kind> core_kinds() {
  return {Kind::NaiveBayes, Kind::LogisticRegression, Kind::KNearestNeighbors,
          Kind::DecisionTree, Kind::RandomForest,      Kind::AdaBoost,
          Kind::LinearSvm,  Kind::RbfSvm};
}

std::vector<Kind> all_kinds() {
  std::vector<Kind> out;
  for (const auto& k : kKinds) out.push_back(k.kind);
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

enum class ParamType { Positive, Count, CountOrZero, Unit, NonNegative };

struct ParamSpec {
  const char* key;
  ParamType type;
  double fallback;
};

std::vector<ParamSpec> param_specs(Kind kind) {
  switch (kind) {
    case Kind::NaiveBayes: return {{"var_smoothing", ParamType::Unit, 1e-9}};
    case Kind::LogisticRegression:
      return {{"C", ParamType::Positive, 1.0}, {"max_iter", ParamType::Count, 100}};
    case Kind::KNearestNeighbors: return {{"k", ParamType::Count, 5}};
    case Kind::DecisionTree:
      return {{"max_depth", ParamType::CountOrZero, 0},
              {"min_samples_leaf", ParamType::Count, 1}};
    case Kind::RandomForest:
    case Kind::ExtraTrees:
      return {{"n_trees", ParamType::Count, 100},
              {"max_depth", ParamType::CountOrZero, 0},
              {"max_features", ParamType::CountOrZero, 0},
              {"min_samples_leaf", ParamType::Count, 1}};
    case Kind::Bagging:
      return {{"n_estimators", ParamType::Count, 10},
              {"max_depth", ParamType::CountOrZero, 0}};
    case Kind::AdaBoost:
      return {{"n_estimators", ParamType::Count, 50},
              {"learning_rate", ParamType::Positive, 1.0},
              {"max_depth", ParamType::Count, 1}};
    case Kind::GradientBoosting:
      return {{"n_estimators", ParamType::Count, 50},
              {"learning_rate", ParamType::Unit, 0.1},
              {"max_depth", ParamType::Count, 3}};
    case Kind::LinearSvm: return {{"C", ParamType::Positive, 1.0}};
    case Kind::RbfSvm:
      return {{"C", ParamType::Positive, 1.0}, {"gamma", ParamType::NonNegative, 0.0}};
    case Kind::SgdLinear:
      return {{"alpha", ParamType::Positive, 1e-4}, {"epochs", ParamType::Count, 20}};
  }
  return {};
}

bool legal(ParamType type, double v) {
  if (!std::isfinite(v)) return false;
  switch (type) {
    case ParamType::Positive: return v > 0.0;
    case ParamType::Count: return v >= 1.0 && v == std::floor(v);
    case ParamType::CountOrZero: return v >= 0.0 && v == std::floor(v);
    case ParamType::Unit: return v > 0.0 && v <= 1.0;
    case ParamType::NonNegative: return v >= 0.0;
  }
  return false;
}

}  // namespace

nlohmann::json validate_params(Kind kind, const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object())
    throw DomainError(kind_name(kind) + ": parameters must be an object");
  const auto specs = param_specs(kind);
  if (params.is_object()) {
    for (const auto& [key, value] : params.items()) {
      const bool known = std::any_of(specs.begin(), specs.end(),
                                     [&](const ParamSpec& s) { return key == s.key; });
      if (!known) throw DomainError(kind_name(kind) + ": unknown parameter '" + key + "'");
    }
  }
  nlohmann::json out = nlohmann::json::object();
  for (const auto& s : specs) {
    double v = s.fallback;
    if (params.is_object() && params.contains(s.key)) {
      const auto& p = params.at(s.key);
      if (!p.is_number())
        throw DomainError(kind_name(kind) + ": parameter '" + s.key + "' must be a number");
      v = p.get<double>();
    }
    if (!legal(s.type, v))
      throw DomainError(kind_name(kind) + ": illegal value " + format_double(v) +
                        " for '" + s.key + "'");
    if (s.type == ParamType::Count || s.type == ParamType::CountOrZero)
      out[s.key] = static_cast<std::uint64_t>(v);
    else
      out[s.key] = v;
  }
  return out;
}

std::vector<nlohmann::json> default_grid(Kind kind) {
  using nlohmann::json;
  switch (kind) {
    case Kind::NaiveBayes: return {json{{"var_smoothing", 1e-9}}};
    case Kind::LogisticRegression: return {json{{"C", 0.1}}, json{{"C", 1.0}}, json{{"C", 10.0}}};
    case Kind::KNearestNeighbors:
      return {json{{"k", 1}}, json{{"k", 3}}, json{{"k", 5}}, json{{"k", 7}}};
    case Kind::DecisionTree:
      return {json{{"max_depth", 3}}, json{{"max_depth", 5}}, json{{"max_depth", 10}},
              json{{"max_depth", 0}}};
    case Kind::RandomForest: return {json{{"n_trees", 100}}};
    case Kind::ExtraTrees: return {json{{"n_trees", 100}}};
    case Kind::Bagging: return {json{{"n_estimators", 10}}};
    case Kind::AdaBoost: return {json{{"n_estimators", 50}}};
    case Kind::GradientBoosting: return {json{{"n_estimators", 50}, {"max_depth", 3}}};
    case Kind::LinearSvm: return {json{{"C", 0.1}}, json{{"C", 1.0}}, json{{"C", 10.0}}};
    case Kind::RbfSvm:
      return {json{{"C", 1.0}, {"gamma", 0.0}}, json{{"C", 10.0}, {"gamma", 0.0}}};
    case Kind::SgdLinear: return {json{{"alpha", 1e-4}}, json{{"alpha", 1e-3}}};
  }
  return {};
}

VectorXd BinaryClassifier::scores(const MatrixXd& x) const {
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = score(x.row(i).transpose());
  return out;
}

std::vector<int> BinaryClassifier::predict_all(const MatrixXd& x) const {
  const VectorXd s = scores(x);
  const double t = threshold();
  std::vector<int> out(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = s[i] > t ? 1 : -1;
  return out;
}

// ---------------------------------------------------------------------------
// Trees

int Tree::leaf_of(const VectorXd& x) const {
  if (feature.empty()) throw DomainError("empty tree");
  std::size_t node = 0;
  while (feature[node] >= 0) {
    const auto f = static_cast<Eigen::Index>(feature[node]);
    if (f >= x.size()) throw DomainError("tree feature index exceeds input dimension");
    node = static_cast<std::size_t>(x[f] <= threshold[node] ? left[node] : right[node]);
  }
  return static_cast<int>(node);
}

std::size_t Tree::depth() const {
  if (feature.empty()) return 0;
  std::vector<std::size_t> d(feature.size(), 0);
  std::size_t deepest = 0;
  // Children always follow their parent in the arrays.
  for (std::size_t n = 0; n < feature.size(); ++n) {
    deepest = std::max(deepest, d[n]);
    if (feature[n] >= 0) {
      d[static_cast<std::size_t>(left[n])] = d[n] + 1;
      d[static_cast<std::size_t>(right[n])] = d[n] + 1;
    }
  }
  return deepest;
}

nlohmann::json Tree::to_json() const {
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value}};
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  j.at("feature").get_to(t.feature);
  j.at("threshold").get_to(t.threshold);
  j.at("left").get_to(t.left);
  j.at("right").get_to(t.right);
  j.at("value").get_to(t.value);
  const std::size_t n = t.feature.size();
  if (n == 0 || t.threshold.size() != n || t.left.size() != n || t.right.size() != n ||
      t.value.size() != n)
    throw ParseError("malformed tree arrays");
  for (std::size_t i = 0; i < n; ++i) {
    if (t.feature[i] < 0) continue;
    if (t.left[i] <= static_cast<int>(i) || t.right[i] <= static_cast<int>(i) ||
        t.left[i] >= static_cast<int>(n) || t.right[i] >= static_cast<int>(n))
      throw ParseError("malformed tree child index");
  }
  return t;
}

namespace {

struct Sums {
  double w = 0.0, s = 0.0, q = 0.0;
  std::size_t count = 0;
  void add(double weight, double t) {
    w += weight;
    s += weight * t;
    q += weight * t * t;
    ++count;
  }
  // Weighted sum of squared deviations.
  double impurity() const { return w > 0.0 ? std::max(0.0, q - s * s / w) : 0.0; }
};

class TreeBuilder {
 public:
  TreeBuilder(const MatrixXd& x, const VectorXd& target, const VectorXd& weights,
              const TreeParams& params, std::uint64_t seed)
      : x_(x), t_(target), w_(weights), p_(params), rng_(seed) {}

  Tree build(const IndexList& rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double cost = std::numeric_limits<double>::infinity();
  };

  std::size_t add_node(double value) {
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    return tree_.feature.size() - 1;
  }

  std::vector<std::size_t> candidate_features() {
    const auto d = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (p_.max_features == 0 || p_.max_features >= d) return all;
    for (std::size_t i = 0; i < p_.max_features; ++i)
      std::swap(all[i], all[i + rng_.index(d - i)]);
    all.resize(p_.max_features);
    std::sort(all.begin(), all.end());
    return all;
  }

  void consider(Split& best, std::size_t f, double thr, const Sums& l, const Sums& r) {
    if (l.count < p_.min_samples_leaf || r.count < p_.min_samples_leaf) return;
    const double cost = l.impurity() + r.impurity();
    if (cost < best.cost) best = {static_cast<int>(f), thr, cost};
  }

  Split best_split(const IndexList& rows, const Sums& total) {
    Split best;
    std::vector<std::pair<double, std::size_t>> col(rows.size());
    for (auto f : candidate_features()) {
      const auto fc = static_cast<Eigen::Index>(f);
      if (p_.random_thresholds) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto i : rows) {
          lo = std::min(lo, x_(static_cast<Eigen::Index>(i), fc));
          hi = std::max(hi, x_(static_cast<Eigen::Index>(i), fc));
        }
        if (!(hi > lo)) continue;
        double thr = rng_.uniform(lo, hi);
        if (thr >= hi) thr = lo;
        Sums l, r;
        for (auto i : rows) {
          const auto ii = static_cast<Eigen::Index>(i);
          (x_(ii, fc) <= thr ? l : r).add(w_[ii], t_[ii]);
        }
        consider(best, f, thr, l, r);
        continue;
      }
      for (std::size_t k = 0; k < rows.size(); ++k)
        col[k] = {x_(static_cast<Eigen::Index>(rows[k]), fc), rows[k]};
      std::sort(col.begin(), col.end());
      Sums l, r = total;
      for (std::size_t k = 0; k + 1 < col.size(); ++k) {
        const auto ii = static_cast<Eigen::Index>(col[k].second);
        l.add(w_[ii], t_[ii]);
        r.w -= w_[ii];
        r.s -= w_[ii] * t_[ii];
        r.q -= w_[ii] * t_[ii] * t_[ii];
        --r.count;
        const double a = col[k].first, b = col[k + 1].first;
        if (!(a < b)) continue;
        double thr = a + (b - a) / 2.0;
        if (!(thr < b)) thr = a;
        consider(best, f, thr, l, r);
      }
    }
    return best;
  }

  std::size_t grow(const IndexList& rows, std::size_t depth) {
    Sums total;
    for (auto i : rows) {
      const auto ii = static_cast<Eigen::Index>(i);
      total.add(w_[ii], t_[ii]);
    }
    const std::size_t node = add_node(total.w > 0.0 ? total.s / total.w : 0.0);
    const double impurity = total.impurity();
    const bool depth_cap = p_.max_depth != 0 && depth >= p_.max_depth;
    if (depth_cap || rows.size() < std::max<std::size_t>(2, p_.min_samples_split) ||
        rows.size() < 2 * p_.min_samples_leaf || impurity <= 1e-12 * std::max(1.0, total.w))
      return node;

    const Split split = best_split(rows, total);
    if (split.feature < 0 || !(split.cost < impurity - 1e-12 * std::max(1.0, impurity)))
      return node;

    IndexList l, r;
    const auto fc = static_cast<Eigen::Index>(split.feature);
    for (auto i : rows) (x_(static_cast<Eigen::Index>(i), fc) <= split.threshold ? l : r).push_back(i);
    tree_.feature[node] = split.feature;
    tree_.threshold[node] = split.threshold;
    const std::size_t ln = grow(l, depth + 1);
    const std::size_t rn = grow(r, depth + 1);
    tree_.left[node] = static_cast<int>(ln);
    tree_.right[node] = static_cast<int>(rn);
    return node;
  }

  const MatrixXd& x_;
  const VectorXd& t_;
  const VectorXd& w_;
  TreeParams p_;
  Rng rng_;
  Tree tree_;
};

}  // namespace

Tree fit_tree(const MatrixXd& x, const VectorXd& target, const VectorXd& weights,
              const IndexList& rows, const TreeParams& params, std::uint64_t seed) {
  if (target.size() != x.rows() || weights.size() != x.rows())
    throw DomainError("fit_tree: target or weights misaligned with rows");
  if (rows.empty()) throw DomainError("fit_tree: no rows");
  if (params.min_samples_leaf < 1) throw DomainError("fit_tree: min_samples_leaf must be >= 1");
  return TreeBuilder(x, target, weights, params, seed).build(rows);
}

// ---------------------------------------------------------------------------
// Models

namespace {

VectorXd zero_one(std::span<const int> y) {
  VectorXd t(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) t[static_cast<Eigen::Index>(i)] = y[i] > 0 ? 1.0 : 0.0;
  return t;
}

IndexList all_rows(std::size_t n) {
  IndexList r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

IndexList bootstrap(std::size_t n, Rng& rng) {
  IndexList r(n);
  for (auto& i : r) i = rng.index(n);
  std::sort(r.begin(), r.end());
  return r;
}

nlohmann::json scaler_json(const Standardizer<double>& s) {
  return {{"mean", to_std(s.mean)}, {"scale", to_std(s.scale)}};
}

Standardizer<double> scaler_from(const nlohmann::json& j) {
  Standardizer<double> s;
  s.mean = vector_from_json(j.at("mean"));
  s.scale = vector_from_json(j.at("scale"));
  if (s.mean.size() != s.scale.size()) throw ParseError("scaler size mismatch");
  return s;
}

void check_input(const VectorXd& x, Eigen::Index d) {
  if (x.size() != d) throw DomainError("feature dimension differs from the model");
}

class NaiveBayesModel final : public BinaryClassifier {
 public:
  VectorXd mean[2], var[2];
  double log_prior[2] = {0.0, 0.0};

  Kind kind() const override { return Kind::NaiveBayes; }
  double threshold() const override { return 0.5; }
  Eigen::Index dimension() const override { return mean[0].size(); }

  double score(const VectorXd& x) const override {
    check_input(x, dimension());
    double ll[2];
    for (int c = 0; c < 2; ++c) {
      ll[c] = log_prior[c] -
              0.5 * ((x - mean[c]).array().square() / var[c].array() +
                     (2.0 * std::numbers::pi * var[c].array()).log())
                        .sum();
    }
    return sigmoid(ll[1] - ll[0]);
  }

  nlohmann::json payload() const override {
    return {{"mean_neg", to_std(mean[0])}, {"mean_pos", to_std(mean[1])},
            {"var_neg", to_std(var[0])},   {"var_pos", to_std(var[1])},
            {"log_prior_neg", log_prior[0]}, {"log_prior_pos", log_prior[1]}};
  }

  static std::unique_ptr<NaiveBayesModel> fit(const MatrixXd& x, std::span<const int> y,
                                              double smoothing) {
    auto m = std::make_unique<NaiveBayesModel>();
    const auto d = x.cols();
    double max_var = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double mu = x.col(c).mean();
      max_var = std::max(max_var, (x.col(c).array() - mu).square().mean());
    }
    const double eps = smoothing * (max_var > 0.0 ? max_var : 1.0);
    for (int c = 0; c < 2; ++c) {
      IndexList rows;
      for (std::size_t i = 0; i < y.size(); ++i)
        if ((y[i] > 0) == (c == 1)) rows.push_back(i);
      const MatrixXd xc = take_rows(x, rows);
      m->mean[c] = xc.colwise().mean().transpose();
      m->var[c] = ((xc.rowwise() - m->mean[c].transpose()).array().square().colwise().mean())
                      .transpose()
                      .matrix();
      m->var[c].array() += eps;
      m->log_prior[c] = std::log(static_cast<double>(rows.size()) / static_cast<double>(y.size()));
    }
    return m;
  }

  static std::unique_ptr<NaiveBayesModel> load(const nlohmann::json& j) {
    auto m = std::make_unique<NaiveBayesModel>();
    m->mean[0] = vector_from_json(j.at("mean_neg"));
    m->mean[1] = vector_from_json(j.at("mean_pos"));
    m->var[0] = vector_from_json(j.at("var_neg"));
    m->var[1] = vector_from_json(j.at("var_pos"));
    m->log_prior[0] = j.at("log_prior_neg").get<double>();
    m->log_prior[1] = j.at("log_prior_pos").get<double>();
    const auto d = m->mean[0].size();
    if (m->mean[1].size() != d || m->var[0].size() != d || m->var[1].size() != d)
      throw ParseError("naive-bayes payload size mismatch");
    return m;
  }
};

// Linear score w . standardize(x) + b, optionally squashed to a probability.
class LinearModel final : public BinaryClassifier {
 public:
  Kind which = Kind::LogisticRegression;
  Standardizer<double> scaler;
  VectorXd w;
  double b = 0.0;

  Kind kind() const override { return which; }
  bool probabilistic() const { return which == Kind::LogisticRegression; }
  double threshold() const override { return probabilistic() ? 0.5 : 0.0; }
  Eigen::Index dimension() const override { return w.size(); }

  double score(const VectorXd& x) const override {
    check_input(x, dimension());
    const double z = w.dot(scaler.apply_row(x.transpose())) + b;
    return probabilistic() ? sigmoid(z) : z;
  }

  nlohmann::json payload() const override {
    return {{"scaler", scaler_json(scaler)}, {"weights", to_std(w)}, {"bias", b}};
  }

  static std::unique_ptr<LinearModel> load(Kind kind, const nlohmann::json& j) {
    auto m = std::make_unique<LinearModel>();
    m->which = kind;
    m->scaler = scaler_from(j.at("scaler"));
    m->w = vector_from_json(j.at("weights"));
    m->b = j.at("bias").get<double>();
    if (m->w.size() != m->scaler.dimension()) throw ParseError("linear payload size mismatch");
    return m;
  }
};

// L2-regularized logistic regression by damped Newton steps; the intercept
// is not penalized.
std::unique_ptr<LinearModel> fit_logistic(const MatrixXd& x, std::span<const int> y, double C,
                                          std::size_t max_iter) {
  auto m = std::make_unique<LinearModel>();
  m->which = Kind::LogisticRegression;
  m->scaler = Standardizer<double>::fit(x);
  const MatrixXd z = m->scaler.apply(x);
  const auto n = z.rows(), d = z.cols();
  MatrixXd a(n, d + 1);
  a << z, VectorXd::Ones(n);
  VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) yy[i] = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0;

  auto loss = [&](const VectorXd& beta) {
    const VectorXd margin = (a * beta).cwiseProduct(yy);
    double l = 0.5 * beta.head(d).squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = -margin[i];
      l += C * (t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)));
    }
    return l;
  };

  VectorXd beta = VectorXd::Zero(d + 1);
  double current = loss(beta);
  for (std::size_t it = 0; it < max_iter; ++it) {
    const VectorXd margin = (a * beta).cwiseProduct(yy);
    VectorXd grad = VectorXd::Zero(d + 1);
    grad.head(d) = beta.head(d);
    VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sigmoid(-margin[i]);
      grad -= C * s * yy[i] * a.row(i).transpose();
      h[i] = C * s * (1.0 - s);
    }
    MatrixXd hess = a.transpose() * h.asDiagonal() * a;
    hess.diagonal().head(d).array() += 1.0;
    hess(d, d) += 1e-10;
    const VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    VectorXd next = beta - step;
    double next_loss = loss(next);
    while (next_loss > current && t > 1e-10) {
      t *= 0.5;
      next = beta - t * step;
      next_loss = loss(next);
    }
    if (next_loss > current) break;
    const double change = (t * step).cwiseAbs().maxCoeff();
    beta = next;
    current = next_loss;
    if (change < 1e-10) break;
  }
  m->w = beta.head(d);
  m->b = beta[d];
  return m;
}

// Pegasos-style hinge-loss SGD with iterate averaging; the bias is treated
// as an extra regularized input fixed at 1.
std::unique_ptr<LinearModel> fit_sgd(const MatrixXd& x, std::span<const int> y, double alpha,
                                     std::size_t epochs, std::uint64_t seed) {
  auto m = std::make_unique<LinearModel>();
  m->which = Kind::SgdLinear;
  m->scaler = Standardizer<double>::fit(x);
  const MatrixXd z = m->scaler.apply(x);
  const auto n = static_cast<std::size_t>(z.rows());
  const auto d = z.cols();
  VectorXd w = VectorXd::Zero(d), avg_w = VectorXd::Zero(d);
  double b = 0.0, avg_b = 0.0;
  Rng rng(seed);
  IndexList order = all_rows(n);
  std::size_t t = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (alpha * static_cast<double>(t + 1));
      const double yi = y[i] > 0 ? 1.0 : -1.0;
      const auto row = z.row(static_cast<Eigen::Index>(i)).transpose();
      const double margin = yi * (w.dot(row) + b);
      w *= 1.0 - eta * alpha;
      b *= 1.0 - eta * alpha;
      if (margin < 1.0) {
        w += eta * yi * row;
        b += eta * yi;
      }
      const double mix = 1.0 / static_cast<double>(t);
      avg_w += mix * (w - avg_w);
      avg_b += mix * (b - avg_b);
    }
  }
  m->w = avg_w;
  m->b = avg_b;
  return m;
}

class KnnModel final : public BinaryClassifier {
 public:
  Standardizer<double> scaler;
  MatrixXd points;
  std::vector<int> labels;
  std::size_t k = 5;

  Kind kind() const override { return Kind::KNearestNeighbors; }
  double threshold() const override { return 0.5; }
  Eigen::Index dimension() const override { return scaler.dimension(); }

  double score(const VectorXd& x) const override {
    check_input(x, dimension());
    const VectorXd z = scaler.apply_row(x.transpose());
    const VectorXd d2 = (points.rowwise() - z.transpose()).rowwise().squaredNorm();
    std::vector<std::size_t> order = all_rows(labels.size());
    const std::size_t kk = std::min(k, labels.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double da = d2[static_cast<Eigen::Index>(a)];
                        const double db = d2[static_cast<Eigen::Index>(b)];
                        return da != db ? da < db : a < b;
                      });
    std::size_t pos = 0;
    for (std::size_t i = 0; i < kk; ++i) pos += labels[order[i]] > 0;
    return static_cast<double>(pos) / static_cast<double>(kk);
  }

  nlohmann::json payload() const override {
    return {{"k", k}, {"scaler", scaler_json(scaler)}, {"points", matrix_json(points)},
            {"labels", labels}};
  }

  static std::unique_ptr<KnnModel> load(const nlohmann::json& j) {
    auto m = std::make_unique<KnnModel>();
    m->k = j.at("k").get<std::size_t>();
    m->scaler = scaler_from(j.at("scaler"));
    m->points = matrix_from_json(j.at("points"), m->scaler.dimension());
    j.at("labels").get_to(m->labels);
    if (m->k < 1 || m->labels.size() != static_cast<std::size_t>(m->points.rows()) ||
        m->labels.empty())
      throw ParseError("k-nearest-neighbors payload mismatch");
    return m;
  }
};

// Trees combined as sum(weight_m * out_m(x)) + offset, where out_m is the
// leaf value or, for discrete boosting, the sign of (leaf value - 0.5).
class TreeEnsembleModel final : public BinaryClassifier {
 public:
  Kind which = Kind::DecisionTree;
  Eigen::Index dim = 0;
  std::vector<Tree> trees;
  std::vector<double> weights;
  double offset = 0.0;
  bool discrete = false;
  double cut = 0.5;

  Kind kind() const override { return which; }
  double threshold() const override { return cut; }
  Eigen::Index dimension() const override { return dim; }

  double score(const VectorXd& x) const override {
    check_input(x, dim);
    double s = offset;
    for (std::size_t m = 0; m < trees.size(); ++m) {
      const double v = trees[m].predict(x);
      s += weights[m] * (discrete ? (v > 0.5 ? 1.0 : -1.0) : v);
    }
    return s;
  }

  nlohmann::json payload() const override {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& tree : trees) t.push_back(tree.to_json());
    return {{"dimension", dim}, {"offset", offset}, {"discrete", discrete},
            {"threshold", cut}, {"weights", weights}, {"trees", t}};
  }

  static std::unique_ptr<TreeEnsembleModel> load(Kind kind, const nlohmann::json& j) {
    auto m = std::make_unique<TreeEnsembleModel>();
    m->which = kind;
    m->dim = j.at("dimension").get<Eigen::Index>();
    m->offset = j.at("offset").get<double>();
    m->discrete = j.at("discrete").get<bool>();
    m->cut = j.at("threshold").get<double>();
    j.at("weights").get_to(m->weights);
    for (const auto& t : j.at("trees")) m->trees.push_back(Tree::from_json(t));
    if (m->trees.empty() || m->trees.size() != m->weights.size())
      throw ParseError("tree ensemble payload mismatch");
    for (const auto& t : m->trees)
      for (int f : t.feature)
        if (f >= m->dim) throw ParseError("tree feature index exceeds dimension");
    return m;
  }
};

std::size_t forest_features(std::size_t requested, Eigen::Index d) {
  if (requested > 0) return std::min<std::size_t>(requested, static_cast<std::size_t>(d));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
}

std::unique_ptr<TreeEnsembleModel> fit_forest(Kind kind, const nlohmann::json& p,
                                              const MatrixXd& x, std::span<const int> y,
                                              std::uint64_t seed) {
  auto m = std::make_unique<TreeEnsembleModel>();
  m->which = kind;
  m->dim = x.cols();
  const auto n = static_cast<std::size_t>(x.rows());
  const VectorXd t = zero_one(y);
  const VectorXd w = VectorXd::Ones(x.rows());
  TreeParams tp;
  std::size_t count = 1;
  bool resample = false;
  tp.max_depth = p.at("max_depth").get<std::size_t>();
  switch (kind) {
    case Kind::DecisionTree:
      tp.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
      break;
    case Kind::RandomForest:
    case Kind::ExtraTrees:
      count = p.at("n_trees").get<std::size_t>();
      tp.max_features = forest_features(p.at("max_features").get<std::size_t>(), x.cols());
      tp.min_samples_leaf = p.at("min_samples_leaf").get<std::size_t>();
      tp.random_thresholds = kind == Kind::ExtraTrees;
      resample = kind == Kind::RandomForest;
      break;
    case Kind::Bagging:
      count = p.at("n_estimators").get<std::size_t>();
      resample = true;
      break;
    default:
      throw DomainError("not a tree-averaging kind");
  }
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t s = derive_seed(seed, k);
    Rng rng(derive_seed(s, "rows"));
    const IndexList rows = resample ? bootstrap(n, rng) : all_rows(n);
    m->trees.push_back(fit_tree(x, t, w, rows, tp, derive_seed(s, "tree")));
    m->weights.push_back(1.0 / static_cast<double>(count));
  }
  return m;
}

// Discrete two-class boosting (SAMME) on weighted trees.
std::unique_ptr<TreeEnsembleModel> fit_adaboost(const nlohmann::json& p, const MatrixXd& x,
                                                std::span<const int> y, std::uint64_t seed) {
  auto m = std::make_unique<TreeEnsembleModel>();
  m->which = Kind::AdaBoost;
  m->dim = x.cols();
  m->discrete = true;
  m->cut = 0.0;
  const auto n = static_cast<std::size_t>(x.rows());
  const VectorXd t = zero_one(y);
  VectorXd w = VectorXd::Constant(x.rows(), 1.0 / static_cast<double>(n));
  TreeParams tp;
  tp.max_depth = p.at("max_depth").get<std::size_t>();
  const auto rounds = p.at("n_estimators").get<std::size_t>();
  const double rate = p.at("learning_rate").get<double>();
  const IndexList rows = all_rows(n);
  for (std::size_t r = 0; r < rounds; ++r) {
    Tree tree = fit_tree(x, t, w, rows, tp, derive_seed(seed, r));
    std::vector<char> wrong(n);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pos = tree.predict(x.row(static_cast<Eigen::Index>(i)).transpose()) > 0.5;
      wrong[i] = pos != (y[i] > 0);
      if (wrong[i]) err += w[static_cast<Eigen::Index>(i)];
    }
    err /= w.sum();
    if (err >= 0.5) {
      if (m->trees.empty()) {
        m->trees.push_back(std::move(tree));
        m->weights.push_back(1.0);
      }
      break;
    }
    if (err <= 1e-12) {
      m->trees.push_back(std::move(tree));
      m->weights.push_back(1.0);
      // A perfect learner dominates every other vote.
      if (m->trees.size() > 1) {
        for (std::size_t k = 0; k + 1 < m->weights.size(); ++k) m->weights[k] = 0.0;
      }
      break;
    }
    const double alpha = rate * std::log((1.0 - err) / err);
    m->trees.push_back(std::move(tree));
    m->weights.push_back(alpha);
    for (std::size_t i = 0; i < n; ++i)
      if (wrong[i]) w[static_cast<Eigen::Index>(i)] *= std::exp(alpha);
    w /= w.sum();
  }
  const double total = std::accumulate(m->weights.begin(), m->weights.end(), 0.0);
  if (total > 0.0)
    for (auto& a : m->weights) a /= total;
  return m;
}

// Gradient boosting on the logistic loss; leaves take one Newton step.
std::unique_ptr<TreeEnsembleModel> fit_gradient_boosting(const nlohmann::json& p,
                                                         const MatrixXd& x,
                                                         std::span<const int> y,
                                                         std::uint64_t seed) {
  auto m = std::make_unique<TreeEnsembleModel>();
  m->which = Kind::GradientBoosting;
  m->dim = x.cols();
  m->cut = 0.0;
  const auto n = static_cast<std::size_t>(x.rows());
  const VectorXd t = zero_one(y);
  const double prior = t.mean();
  m->offset = std::log(prior / (1.0 - prior));
  VectorXd f = VectorXd::Constant(x.rows(), m->offset);
  const VectorXd ones = VectorXd::Ones(x.rows());
  TreeParams tp;
  tp.max_depth = p.at("max_depth").get<std::size_t>();
  const auto rounds = p.at("n_estimators").get<std::size_t>();
  const double rate = p.at("learning_rate").get<double>();
  const IndexList rows = all_rows(n);
  for (std::size_t r = 0; r < rounds; ++r) {
    VectorXd prob(x.rows()), resid(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      prob[i] = sigmoid(f[i]);
      resid[i] = t[i] - prob[i];
    }
    Tree tree = fit_tree(x, resid, ones, rows, tp, derive_seed(seed, r));
    std::vector<double> num(tree.value.size(), 0.0), den(tree.value.size(), 0.0);
    std::vector<int> leaf(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      leaf[i] = tree.leaf_of(x.row(ii).transpose());
      num[static_cast<std::size_t>(leaf[i])] += resid[ii];
      den[static_cast<std::size_t>(leaf[i])] += prob[ii] * (1.0 - prob[ii]);
    }
    for (std::size_t k = 0; k < tree.value.size(); ++k)
      tree.value[k] = rate * (den[k] > 1e-12 ? num[k] / den[k] : 0.0);
    for (std::size_t i = 0; i < n; ++i)
      f[static_cast<Eigen::Index>(i)] += tree.value[static_cast<std::size_t>(leaf[i])];
    m->trees.push_back(std::move(tree));
    m->weights.push_back(1.0);
  }
  return m;
}

class SvmClassifier final : public BinaryClassifier {
 public:
  Kind which = Kind::RbfSvm;
  svm::SvmModel model;

  Kind kind() const override { return which; }
  double threshold() const override { return 0.0; }
  Eigen::Index dimension() const override { return model.dimension(); }
  double score(const VectorXd& x) const override { return model.decision_value(x); }
  nlohmann::json payload() const override { return svm::to_json(model); }
};

}  // namespace

std::unique_ptr<BinaryClassifier> train_base(Kind kind, const nlohmann::json& params,
                                             const MatrixXd& x, std::span<const int> y,
                                             std::uint64_t seed) {
  const auto p = validate_params(kind, params);
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw DomainError("feature rows and labels differ in length");
  if (x.cols() == 0) throw DomainError("no features to train on");
  std::size_t pos = 0;
  for (int v : y) {
    if (v != 1 && v != -1) throw DomainError("targets must be +1 or -1");
    pos += v > 0;
  }
  if (pos == 0 || pos == y.size()) throw DomainError("training data holds a single class");

  switch (kind) {
    case Kind::NaiveBayes:
      return NaiveBayesModel::fit(x, y, p.at("var_smoothing").get<double>());
    case Kind::LogisticRegression:
      return fit_logistic(x, y, p.at("C").get<double>(), p.at("max_iter").get<std::size_t>());
    case Kind::SgdLinear:
      return fit_sgd(x, y, p.at("alpha").get<double>(), p.at("epochs").get<std::size_t>(), seed);
    case Kind::KNearestNeighbors: {
      auto m = std::make_unique<KnnModel>();
      m->k = p.at("k").get<std::size_t>();
      m->scaler = Standardizer<double>::fit(x);
      m->points = m->scaler.apply(x);
      m->labels.assign(y.begin(), y.end());
      return m;
    }
    case Kind::DecisionTree:
    case Kind::RandomForest:
    case Kind::ExtraTrees:
    case Kind::Bagging:
      return fit_forest(kind, p, x, y, seed);
    case Kind::AdaBoost: return fit_adaboost(p, x, y, seed);
    case Kind::GradientBoosting: return fit_gradient_boosting(p, x, y, seed);
    case Kind::LinearSvm:
    case Kind::RbfSvm: {
      auto m = std::make_unique<SvmClassifier>();
      m->which = kind;
      svm::TrainOptions opts;
      opts.C = p.at("C").get<double>();
      if (kind == Kind::LinearSvm) {
        opts.kernel = svm::KernelSpec::linear();
      } else {
        const double g = p.at("gamma").get<double>();
        opts.kernel = svm::KernelSpec::rbf(g > 0.0 ? g : 1.0 / static_cast<double>(x.cols()));
      }
      m->model = svm::train_svm(x, y, opts);
      return m;
    }
  }
  throw DomainError("unknown classifier kind");
}

nlohmann::json to_json(const BinaryClassifier& model) {
  return {{"kind", kind_name(model.kind())}, {"model", model.payload()}};
}

std::unique_ptr<BinaryClassifier> classifier_from_json(const nlohmann::json& j) {
  const Kind kind = parse_kind(j.at("kind").get<std::string>());
  const auto& p = j.at("model");
  switch (kind) {
    case Kind::NaiveBayes: return NaiveBayesModel::load(p);
    case Kind::LogisticRegression:
    case Kind::SgdLinear: return LinearModel::load(kind, p);
    case Kind::KNearestNeighbors: return KnnModel::load(p);
    case Kind::DecisionTree:
    case Kind::RandomForest:
    case Kind::ExtraTrees:
    case Kind::Bagging:
    case Kind::AdaBoost:
    case Kind::GradientBoosting: return TreeEnsembleModel::load(kind, p);
    case Kind::LinearSvm:
    case Kind::RbfSvm: {
      auto m = std::make_unique<SvmClassifier>();
      m->which = kind;
      m->model = svm::svm_from_json(p);
      return m;
    }
  }
  throw ParseError("unknown classifier kind");
}

}  // namespace locpred::classifiers
