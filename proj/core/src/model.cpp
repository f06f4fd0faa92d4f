#include "abm/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace abm {
namespace {

int sign(int v) { return (v > 0) - (v < 0); }

constexpr std::string_view kMagic = "ABM-ENSEMBLE";
constexpr int kFormatVersion = 1;

CellDistribution to_cells(Cell from, const MoveDistribution& probs) {
  CellDistribution d;
  for (Move m : kMoves) {
    const auto i = static_cast<std::size_t>(m);
    d.cells[i] = apply_move(from, m);
    d.probs[i] = probs[i];
  }
  return d;
}

Cell mode_cell(const CellDistribution& d) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.probs.size(); ++i)
    if (d.probs[i] > d.probs[best]) best = i;
  return d.cells[best];
}

Cell sample_cell(const CellDistribution& d, Rng& rng) {
  MoveDistribution p{};
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = d.probs[i];
  return d.cells[static_cast<std::size_t>(sample_move(p, rng))];
}

}  // namespace

Move displacement(Cell from, Cell to) {
  const int dx = to.x - from.x;
  const int dy = to.y - from.y;
  if (dx == 0 && dy == 0) return Move::Stay;
  if (dy == 0 && dx == 1) return Move::PlusX;
  if (dy == 0 && dx == -1) return Move::MinusX;
  if (dx == 0 && dy == 1) return Move::PlusY;
  if (dx == 0 && dy == -1) return Move::MinusY;
  throw DataError("transition is not a single-axis unit displacement");
}

int boundary_profile(int grid_size, Cell c) {
  return (c.x == 0 ? 1 : 0) | (c.x == grid_size - 1 ? 2 : 0) | (c.y == 0 ? 4 : 0) |
         (c.y == grid_size - 1 ? 8 : 0);
}

int agent_context(int grid_size, Cell agent, Action a) {
  return static_cast<int>(a) * kProfiles + boundary_profile(grid_size, agent);
}

int adversary_context(int grid_size, Cell adversary, Cell agent_after_move) {
  const int sx = sign(agent_after_move.x - adversary.x) + 1;
  const int sy = sign(agent_after_move.y - adversary.y) + 1;
  return (sx * 3 + sy) * kProfiles + boundary_profile(grid_size, adversary);
}

DynamicsMember::DynamicsMember(int grid_size, double alpha)
    : grid_size_(grid_size),
      alpha_(alpha),
      agent_counts_(kAgentContexts, MoveCounts{}),
      adversary_counts_(kAdversaryContexts, MoveCounts{}) {}

void DynamicsMember::observe(const Transition& tr) {
  const auto ai = static_cast<std::size_t>(agent_context(grid_size_, tr.agent, tr.action));
  ++agent_counts_[ai][static_cast<std::size_t>(displacement(tr.agent, tr.next_agent))];
  const auto vi =
      static_cast<std::size_t>(adversary_context(grid_size_, tr.adversary, tr.next_agent));
  ++adversary_counts_[vi][static_cast<std::size_t>(displacement(tr.adversary, tr.next_adversary))];
}

MoveDistribution DynamicsMember::normalized(const MoveCounts& counts, Cell at) const {
  MoveDistribution p{};
  std::array<bool, 5> valid{};
  int n_valid = 0;
  double total = 0.0;
  for (Move m : kMoves) {
    const auto i = static_cast<std::size_t>(m);
    const Cell c = apply_move(at, m);
    valid[i] = c.x >= 0 && c.y >= 0 && c.x < grid_size_ && c.y < grid_size_;
    if (!valid[i]) continue;
    ++n_valid;
    total += static_cast<double>(counts[i]) + alpha_;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!valid[i]) continue;
    p[i] = total > 0.0 ? (static_cast<double>(counts[i]) + alpha_) / total : 1.0 / n_valid;
  }
  return p;
}

MoveDistribution DynamicsMember::agent_probs(Cell agent, Action a) const {
  return normalized(agent_counts_[static_cast<std::size_t>(agent_context(grid_size_, agent, a))],
                    agent);
}

MoveDistribution DynamicsMember::adversary_probs(Cell adversary, Cell agent_after_move) const {
  return normalized(
      adversary_counts_[static_cast<std::size_t>(
          adversary_context(grid_size_, adversary, agent_after_move))],
      adversary);
}

EnsembleModel fit_ensemble(std::span<const Transition> transitions, int k, double alpha,
                           int grid_size, std::uint64_t seed) {
  if (transitions.empty()) throw DataError("fit: no transitions to learn from");
  if (k < 1) throw ConfigError("model.k must be >= 1");
  if (!(alpha >= 0.0)) throw ConfigError("model.alpha must be >= 0");
  EnsembleModel model;
  model.grid_size = grid_size;
  model.alpha = alpha;
  const std::uint64_t n = transitions.size();
  for (int m = 0; m < k; ++m) {
    const std::uint64_t member_seed = derive_seed(seed, "ensemble-member", static_cast<std::uint64_t>(m));
    Rng rng(member_seed);
    DynamicsMember member(grid_size, alpha);
    for (std::uint64_t i = 0; i < n; ++i) member.observe(transitions[uniform_index(rng, n)]);
    model.members.push_back(std::move(member));
    model.member_seeds.push_back(member_seed);
  }
  return model;
}

NextStateDist predict(const EnsembleModel& model, std::size_t member_index, const GridState& state,
                      Action a) {
  if (member_index >= model.members.size())
    throw UsageError("predict: member index " + std::to_string(member_index) + " out of range");
  const DynamicsMember& member = model.members[member_index];
  NextStateDist out;
  out.agent = to_cells(state.agent, member.agent_probs(state.agent, a));
  out.adversary =
      to_cells(state.adversary, member.adversary_probs(state.adversary, mode_cell(out.agent)));
  return out;
}

NextStateDist predict_mean(const EnsembleModel& model, const GridState& state, Action a) {
  if (model.members.empty()) throw UsageError("predict: empty ensemble");
  MoveDistribution agent{};
  for (const DynamicsMember& m : model.members) {
    const MoveDistribution p = m.agent_probs(state.agent, a);
    for (std::size_t i = 0; i < p.size(); ++i) agent[i] += p[i];
  }
  const double k = static_cast<double>(model.members.size());
  for (double& v : agent) v /= k;
  NextStateDist out;
  out.agent = to_cells(state.agent, agent);
  const Cell agent_mode = mode_cell(out.agent);
  MoveDistribution adv{};
  for (const DynamicsMember& m : model.members) {
    const MoveDistribution p = m.adversary_probs(state.adversary, agent_mode);
    for (std::size_t i = 0; i < p.size(); ++i) adv[i] += p[i];
  }
  for (double& v : adv) v /= k;
  out.adversary = to_cells(state.adversary, adv);
  return out;
}

std::pair<Cell, Cell> sample_next(const NextStateDist& dist, Rng& rng) {
  const Cell agent = sample_cell(dist.agent, rng);
  const Cell adversary = sample_cell(dist.adversary, rng);
  return {agent, adversary};
}

std::pair<Cell, Cell> mode_next(const NextStateDist& dist) {
  return {mode_cell(dist.agent), mode_cell(dist.adversary)};
}

double total_variation(const MoveDistribution& p, const MoveDistribution& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double ensemble_disagreement(const EnsembleModel& model) {
  const std::size_t k = model.members.size();
  if (k < 2) return 0.0;
  const int g = model.grid_size;
  double weighted = 0.0;
  double weight = 0.0;
  // One representative adversary cell per profile; the context's sign pair
  // fixes where the agent sits relative to it.
  for (int ctx = 0; ctx < kAdversaryContexts; ++ctx) {
    double n = 0.0;
    for (const DynamicsMember& m : model.members)
      for (std::uint32_t c : m.adversary_counts()[static_cast<std::size_t>(ctx)]) n += c;
    if (n == 0.0) continue;
    const int profile = ctx % kProfiles;
    const int signs = ctx / kProfiles;
    Cell adv{(profile & 1) ? 0 : (profile & 2) ? g - 1 : 1,
             (profile & 4) ? 0 : (profile & 8) ? g - 1 : 1};
    Cell agent{adv.x + (signs / 3 - 1), adv.y + (signs % 3 - 1)};
    std::vector<MoveDistribution> probs;
    for (const DynamicsMember& m : model.members) probs.push_back(m.adversary_probs(adv, agent));
    double tv = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j, ++pairs) tv += total_variation(probs[i], probs[j]);
    weighted += n * tv / pairs;
    weight += n;
  }
  return weight > 0.0 ? weighted / weight : 0.0;
}

void save_model(const EnsembleModel& model, std::ostream& out) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "grid_size " << model.grid_size << '\n';
  out << "alpha " << format_double(model.alpha) << '\n';
  out << "members " << model.members.size() << '\n';
  out << "config_hash " << (model.config_hash.empty() ? "-" : model.config_hash) << '\n';
  for (std::size_t m = 0; m < model.members.size(); ++m) {
    out << "member " << m << " seed " << model.member_seeds[m] << '\n';
    out << "agent " << kAgentContexts << '\n';
    for (const MoveCounts& c : model.members[m].agent_counts())
      out << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << ' ' << c[4] << '\n';
    out << "adversary " << kAdversaryContexts << '\n';
    for (const MoveCounts& c : model.members[m].adversary_counts())
      out << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << ' ' << c[4] << '\n';
  }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  save_model(model, out);
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(std::string_view expect_what) {
    std::string line;
    if (!std::getline(in_, line))
      throw ParseError("unexpected end of model file, expected " + std::string(expect_what),
                       line_ + 1);
    ++line_;
    return std::istringstream(line);
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

template <typename T>
T read_keyed(LineReader& r, std::string_view key) {
  auto ss = r.next(key);
  std::string k;
  T v{};
  if (!(ss >> k >> v) || k != key) throw ParseError("expected '" + std::string(key) + " <value>'", r.line());
  return v;
}

void read_table(LineReader& r, std::string_view key, int rows, std::vector<MoveCounts>& table) {
  const int n = read_keyed<int>(r, key);
  if (n != rows) throw ParseError(std::string(key) + " table must have " + std::to_string(rows) + " rows", r.line());
  for (int i = 0; i < rows; ++i) {
    auto ss = r.next("count row");
    MoveCounts& c = table[static_cast<std::size_t>(i)];
    if (!(ss >> c[0] >> c[1] >> c[2] >> c[3] >> c[4])) throw ParseError("malformed count row", r.line());
  }
}

}  // namespace

EnsembleModel load_model(std::istream& in) {
  LineReader r(in);
  {
    auto ss = r.next("header");
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != kMagic)
      throw ParseError("not an ensemble model file", r.line());
    if (version != kFormatVersion)
      throw ParseError("unsupported model format version " + std::to_string(version), r.line());
  }
  EnsembleModel model;
  model.grid_size = read_keyed<int>(r, "grid_size");
  model.alpha = read_keyed<double>(r, "alpha");
  const auto k = read_keyed<std::size_t>(r, "members");
  model.config_hash = read_keyed<std::string>(r, "config_hash");
  if (model.config_hash == "-") model.config_hash.clear();
  for (std::size_t m = 0; m < k; ++m) {
    auto ss = r.next("member header");
    std::string word, seed_word;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    if (!(ss >> word >> index >> seed_word >> seed) || word != "member" || index != m ||
        seed_word != "seed")
      throw ParseError("expected 'member " + std::to_string(m) + " seed <u64>'", r.line());
    DynamicsMember member(model.grid_size, model.alpha);
    read_table(r, "agent", kAgentContexts, member.agent_counts());
    read_table(r, "adversary", kAdversaryContexts, member.adversary_counts());
    model.members.push_back(std::move(member));
    model.member_seeds.push_back(seed);
  }
  return model;
}

EnsembleModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return load_model(in);
}

}  // namespace abm
