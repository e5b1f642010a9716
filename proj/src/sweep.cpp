#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include "kzmps/analysis.hpp"
#include "kzmps/evolution.hpp"

namespace kzmps {

long sweep_steps(double v, double dt) {
  if (!(v > 0.0) || !(dt > 0.0)) throw InvalidArgument("sweep_steps: v and dt must be positive");
  const double n = 1.0 / (v * dt);
  return static_cast<long>(std::ceil(n * (1.0 - 1e-12)));
}

namespace {

constexpr char kCheckpointMagic[8] = {'K', 'Z', 'C', 'K', 'P', 'T', 0, 1};

template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <class T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw InvalidArgument("load_checkpoint: truncated file");
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const SweepCheckpoint& cp) {
  std::vector<std::uint8_t> buf(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put<std::int64_t>(buf, cp.step);
  put<std::uint64_t>(buf, cp.series.size());
  for (const auto& p : cp.series) {
    put(buf, p.t);
    put(buf, p.energy);
    put(buf, p.entropy);
    put<std::uint64_t>(buf, p.max_bond_dim);
    put(buf, p.truncation_weight);
  }
  const auto state = serialize(cp.state);
  buf.insert(buf.end(), state.begin(), state.end());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("save_checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

SweepCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_checkpoint: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw InvalidArgument("load_checkpoint: not a checkpoint file");
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  SweepCheckpoint cp;
  cp.step = get<std::int64_t>(bytes, pos);
  const auto n = get<std::uint64_t>(bytes, pos);
  for (std::uint64_t i = 0; i < n; ++i) {
    SeriesPoint p{};
    p.t = get<double>(bytes, pos);
    p.energy = get<double>(bytes, pos);
    p.entropy = get<double>(bytes, pos);
    p.max_bond_dim = get<std::uint64_t>(bytes, pos);
    p.truncation_weight = get<double>(bytes, pos);
    cp.series.push_back(p);
  }
  cp.state = deserialize(std::span<const std::uint8_t>(bytes).subspan(pos));
  return cp;
}

RunRecord run_sweep(const SweepConfig& config, const SweepOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  if (config.chi_max < 1) throw InvalidArgument("run_sweep: chi_max must be at least 1");
  if (config.record_every < 1) throw InvalidArgument("run_sweep: record_every must be positive");
  const long steps = sweep_steps(config.v, config.dt);
  if (options.stop_after > 0 && options.checkpoint.empty()) {
    throw InvalidArgument("run_sweep: stop_after needs a checkpoint path");
  }
  if (options.max_steps > 0 && steps > options.max_steps) {
    throw InvalidArgument("run_sweep: " + std::to_string(steps) + " steps exceed the budget");
  }
  const double duration = 1.0 / config.v;
  const double h = duration / static_cast<double>(steps);

  RunRecord rec;
  rec.config = config;
  rec.steps = steps;
  rec.xi_kz = xi_kz(config.v, config.model.nu, config.model.z);

  const ModelSpec critical = config.model.with_couplings(1.0, 1.0);
  GroundState cooled;
  const GroundState* ground = options.ground;
  if (ground == nullptr) {
    CoolingOptions co;
    co.chi_max = config.chi_max;
    co.cutoff = config.cutoff;
    cooled = cool_ground_state(critical, co);
    ground = &cooled;
  }

  UniformMPS mps = symmetric_product_state(config.model.with_couplings(0.0, 2.0));
  long first = 0;
  if (!options.checkpoint.empty() && std::filesystem::exists(options.checkpoint)) {
    auto cp = load_checkpoint(options.checkpoint);
    mps = std::move(cp.state);
    rec.series = std::move(cp.series);
    first = cp.step;
  }

  auto last_checkpoint = clock::now();
  double weight = 0.0;
  for (long n = first; n < steps; ++n) {
    const double t_mid = -duration + (static_cast<double>(n) + 0.5) * h;
    const auto c = sweep_couplings(config.v, t_mid);
    const auto gates = trotter_gates(config.model.with_couplings(c.J, c.g), h, config.trotter_order,
                                     TimeDirection::Real);
    const auto stats = tebd_step_inplace(mps, gates, config.chi_max, config.cutoff);
    weight += stats.discarded_weight;
    const long done = n + 1;
    if (done % config.record_every == 0 || done == steps) {
      const double t = -duration + static_cast<double>(done) * h;
      const auto cc = sweep_couplings(config.v, t);
      rec.series.push_back({t, energy_density(mps, config.model.with_couplings(cc.J, cc.g)),
                            entanglement_entropy(mps, Bond::AB), mps.max_bond_dim(), weight});
      weight = 0.0;
    }
    if (options.stop_after > 0 && done == options.stop_after && done < steps) {
      save_checkpoint(options.checkpoint, {done, mps, rec.series});
      rec.complete = false;
      rec.final_state = std::move(mps);
      rec.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();
      return rec;
    }
    if (!options.checkpoint.empty() && done < steps &&
        std::chrono::duration<double>(clock::now() - last_checkpoint).count() > options.checkpoint_seconds) {
      save_checkpoint(options.checkpoint, {done, mps, rec.series});
      last_checkpoint = clock::now();
    }
  }

  rec.ground_energy = ground->energy;
  rec.energy_final = energy_density(mps, critical);
  rec.eps_ex = rec.energy_final - rec.ground_energy;
  if (rec.eps_ex < 0.0 && rec.eps_ex >= -1e-8) {
    rec.eps_ex = 0.0;
    rec.eps_clamped = true;
  }
  rec.f = fidelity_density(mps, ground->state);
  rec.entropy_final = entanglement_entropy(mps, Bond::AB);
  rec.final_state = std::move(mps);
  if (!options.checkpoint.empty()) std::filesystem::remove(options.checkpoint);
  rec.wall_seconds = std::chrono::duration<double>(clock::now() - started).count();
  return rec;
}

}  // namespace kzmps
