#include "mjls/model.hpp"

#include <numeric>
#include <sstream>

namespace mjls {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// Boolean adjacency of strictly positive entries.
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

BoolMatrix positive_pattern(const Matrix& t) { return (t.array() > 0.0).matrix(); }

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b) {
  const auto n = a.rows();
  BoolMatrix out = BoolMatrix::Constant(n, b.cols(), false);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      if (a(i, k))
        for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) = out(i, j) || b(k, j);
  return out;
}

}  // namespace

MjlsModel::MjlsModel(std::vector<ModeData> modes, MarkovChain chain, ChannelBank bank,
                     Matrix terminal_weight)
    : modes_(std::move(modes)),
      chain_(std::move(chain)),
      bank_(std::move(bank)),
      terminal_weight_(std::move(terminal_weight)) {
  require(!modes_.empty(), "model needs at least one mode");
  const ModeData& first = modes_.front();
  n_ = static_cast<int>(first.A.rows());
  m_ = static_cast<int>(first.B.cols());
  s_ = static_cast<int>(first.D1.cols());
  p_ = static_cast<int>(first.C.rows());
  require(n_ >= 1, "state dimension must be positive");
  require(m_ >= 1, "input dimension must be positive");
  require(m_ <= 30, "too many channels for outcome indexing");
  require(s_ >= 1, "disturbance dimension must be positive");

  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const ModeData& md = modes_[i];
    const std::string tag = "mode " + std::to_string(i + 1) + ": ";
    require(md.A.rows() == n_ && md.A.cols() == n_, tag + "A is " + shape(md.A));
    require(md.B.rows() == n_ && md.B.cols() == m_, tag + "B is " + shape(md.B));
    require(md.C.rows() == p_ && md.C.cols() == n_, tag + "C is " + shape(md.C));
    require(md.D.rows() == p_ && md.D.cols() == m_, tag + "D is " + shape(md.D));
    require(md.D1.rows() == n_ && md.D1.cols() == s_, tag + "D1 is " + shape(md.D1));
    state_weights_.push_back(md.C.transpose() * md.C);
    input_weights_.push_back(md.D.transpose() * md.D);
  }
  const auto M = static_cast<Eigen::Index>(modes_.size());
  require(chain_.transition.rows() == M && chain_.transition.cols() == M,
          "transition matrix is " + shape(chain_.transition) + ", expected " +
              std::to_string(M) + "x" + std::to_string(M));
  require(bank_.size() == m_, "channel bank has " + std::to_string(bank_.size()) +
                                  " channels, input dimension is " + std::to_string(m_));
  if (terminal_weight_.size() == 0) terminal_weight_ = Matrix::Zero(n_, n_);
  require(terminal_weight_.rows() == n_ && terminal_weight_.cols() == n_,
          "terminal weight is " + shape(terminal_weight_));
}

MjlsModel::MjlsModel(std::vector<ModeData> modes, MarkovChain chain, ChannelBank bank)
    : MjlsModel(std::move(modes), std::move(chain), std::move(bank), Matrix()) {}

MjlsModel MjlsModel::with_bank(ChannelBank bank) const {
  return MjlsModel(modes_, chain_, std::move(bank), terminal_weight_);
}

bool ValidationReport::passed() const {
  for (const auto& f : findings)
    if (!f.passed) return false;
  return true;
}

const Finding* ValidationReport::find(const std::string& name) const {
  for (const auto& f : findings)
    if (f.name == name) return &f;
  return nullptr;
}

bool is_irreducible(const Matrix& transition) {
  const auto n = transition.rows();
  if (n == 0) return false;
  // Reachability closure (Warshall).
  BoolMatrix reach = positive_pattern(transition);
  for (Eigen::Index i = 0; i < n; ++i) reach(i, i) = true;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      if (reach(i, k))
        for (Eigen::Index j = 0; j < n; ++j) reach(i, j) = reach(i, j) || reach(k, j);
  return reach.all();
}

int chain_period(const Matrix& transition) {
  const auto n = transition.rows();
  const BoolMatrix step = positive_pattern(transition);
  BoolMatrix power = step;
  int g = 0;
  for (Eigen::Index len = 1; len <= n; ++len) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (power(i, i)) g = std::gcd(g, static_cast<int>(len));
    power = bool_product(power, step);
  }
  return g;
}

ValidationReport validate_model(const MjlsModel& model) {
  ValidationReport report;
  auto add = [&](const char* name, bool ok, std::string detail) {
    report.findings.push_back({name, ok, std::move(detail)});
  };
  const Matrix& T = model.chain().transition;
  const int M = model.num_modes();

  {
    std::ostringstream bad;
    bool ok = true;
    for (int i = 0; i < M; ++i) {
      const bool in_range = (T.row(i).array() >= 0.0).all() && (T.row(i).array() <= 1.0).all();
      const bool sums = std::abs(T.row(i).sum() - 1.0) <= kExactZeroTol;
      if (!in_range || !sums) {
        ok = false;
        bad << " row " << (i + 1);
      }
    }
    add(finding::kRowStochastic, ok, ok ? "rows sum to 1" : "invalid:" + bad.str());
  }
  {
    const bool ok = is_irreducible(T);
    add(finding::kIrreducible, ok, ok ? "positive-entry digraph strongly connected"
                                      : "positive-entry digraph not strongly connected");
  }
  {
    const int period = chain_period(T);
    add(finding::kAperiodic, period == 1, "period " + std::to_string(period));
  }

  auto per_mode = [&](const char* name, auto&& check, const std::string& what) {
    std::ostringstream bad;
    bool ok = true;
    for (int i = 0; i < M; ++i) {
      if (!check(i)) {
        ok = false;
        bad << " " << (i + 1);
      }
    }
    add(name, ok, ok ? what + " for all modes" : what + " fails for mode(s)" + bad.str());
  };
  const int n = model.state_dim();
  per_mode(finding::kFullRankA, [&](int i) { return numerical_rank(model.mode(i).A) == n; },
           "A full rank");
  per_mode(finding::kNoCrossWeight,
           [&](int i) {
             const ModeData& md = model.mode(i);
             const Matrix cross = md.C.transpose() * md.D;
             return cross.size() == 0 || cross.cwiseAbs().maxCoeff() <= kExactZeroTol;
           },
           "CᵀD = 0");
  per_mode(finding::kInputWeightPd,
           [&](int i) { return is_positive_definite(model.input_weight(i)); }, "DᵀD ≻ 0");
  {
    const bool ok = is_positive_semidefinite(model.terminal_weight());
    add(finding::kTerminalPsd, ok, ok ? "W ⪰ 0" : "W has a negative eigenvalue");
  }
  per_mode(finding::kStateWeightDominates,
           [&](int i) {
             return is_positive_semidefinite(model.state_weight(i) - model.terminal_weight());
           },
           "W(i) ⪰ W");
  {
    std::ostringstream bad;
    bool ok = true;
    for (int h = 0; h < model.bank().size(); ++h) {
      const auto& ch = model.bank().channels[static_cast<std::size_t>(h)];
      const bool good = ch.stay_good > 0.0 && ch.stay_good <= 1.0 && ch.recover > 0.0 &&
                        ch.recover <= 1.0;
      if (!good) {
        ok = false;
        bad << " " << (h + 1);
      }
    }
    add(finding::kChannelProbabilities, ok,
        ok ? "stay_good, recover in (0,1]" : "out of (0,1] for channel(s)" + bad.str());
  }
  return report;
}

}  // namespace mjls
