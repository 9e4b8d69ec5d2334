#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pushcraft/arcs.hpp"
#include "pushcraft/statics.hpp"

namespace pushcraft {

struct CandidateSet {
  std::vector<ContactPoint> points;
  std::vector<int> per_edge;  // segment count of each outline edge
};

/// Segment centres of every outline edge (ceil(length / segment_len) per
/// edge). With a workspace and pose samples, candidates whose robot disc
/// collides at every sampled pose are dropped.
CandidateSet candidate_contacts(const ObjectIntrinsics& intr, double robot_radius, double segment_len,
                                double f_push_max, const Workspace* ws = nullptr,
                                std::span<const SE2State> pose_samples = {});

/// Robot centre (body frame) for a robot of `radius` touching `cp`.
Vec2 robot_center(const ContactPoint& cp, double radius);

/// Contacts at least one robot diameter apart along the boundary and
/// between robot centres.
bool contacts_spaced(const ContactPoint& a, const ContactPoint& b, double perimeter, double robot_radius);
bool mode_spaced(const InteractionMode& mode, double perimeter, double robot_radius);

struct ModeGenConfig {
  int n_robots = 3;
  int n_modes = 5;               // W_xi
  double robot_radius = 0.125;
  double sparsity_weight = 1.0;  // scale of the row-sparsity terms
  DirectionWeights weights = kDefaultWeights;
  std::uint64_t seed = 1;
};

struct ModeGenResult {
  std::vector<InteractionMode> modes;
  std::vector<double> row_scores;  // per candidate
  Eigen::MatrixXd force_matrix;    // N_V x 2D (normal, tangential per direction)
  double objective = 0.0;
};

/// Sparse force distribution over every candidate, then mode extraction.
ModeGenResult mg_so(const CandidateSet& cands, const BodyVelocity& p, const ObjectIntrinsics& intr,
                    const ModeGenConfig& cfg);

/// Memoised mg_so results keyed by the rounded unit direction, with the
/// multi-directional feasibility of every returned mode.
class ModeLibrary {
 public:
  ModeLibrary(const ObjectIntrinsics& intr, CandidateSet cands, ModeGenConfig cfg);

  struct Entry {
    std::vector<InteractionMode> modes;
    std::vector<double> jmf;
    size_t best = 0;
    double best_jmf() const { return jmf.empty() ? 0.0 : jmf[best]; }
  };

  const Entry& get(const BodyVelocity& p);
  const ObjectIntrinsics& intrinsics() const { return *intr_; }
  const CandidateSet& candidates() const { return cands_; }
  const ModeGenConfig& config() const { return cfg_; }
  size_t size() const { return cache_.size(); }

 private:
  const ObjectIntrinsics* intr_;
  CandidateSet cands_;
  ModeGenConfig cfg_;
  std::map<std::array<long long, 3>, Entry> cache_;
};

/// Key velocities: the spanning directions of (1, 0, 0).
std::array<BodyVelocity, 6> key_velocities(const ObjectIntrinsics& intr);

struct Witness {
  BodyVelocity key;
  InteractionMode mode;
  double value = 0.0;  // J_F of `key` in `mode`
};

struct SufficiencyReport {
  bool sufficient = false;
  std::array<Witness, 6> witnesses;
};

using ModeGenerator = std::function<std::vector<InteractionMode>(const BodyVelocity&)>;

/// For every key velocity, the mode with minimum J_F among all generated
/// modes (pooled over key velocities).
SufficiencyReport check_sufficient(const ModeGenerator& generate, const ObjectIntrinsics& intr);
SufficiencyReport check_sufficient(const CandidateSet& cands, const ObjectIntrinsics& intr, const ModeGenConfig& cfg);

struct SataPiece {
  ArcTransition arc;
  int key_index = -1;  // -1: original arc kept
  InteractionMode mode;
};

struct SataResult {
  std::vector<SataPiece> pieces;
  int segments = 0;  // L
  double hausdorff = 0.0;
};

class InsufficientModes : public std::runtime_error {
 public:
  InsufficientModes() : std::runtime_error("insufficient mode set") {}
};

/// Replaces `arc` by sequences of key-velocity arcs; L doubles until the
/// sampled Hausdorff error is at most e.
SataResult sata(const ArcTransition& arc, double e, const SufficiencyReport& witness, const ObjectIntrinsics& intr,
                double sample_spacing, int max_segments = 1024);

/// Approximation for a fixed L (no stopping rule).
SataResult sata_fixed(const ArcTransition& arc, int L, const SufficiencyReport& witness,
                      const ObjectIntrinsics& intr, double sample_spacing);

}  // namespace pushcraft
