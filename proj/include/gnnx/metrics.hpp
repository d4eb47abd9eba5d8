#ifndef GNNX_METRICS_HPP_
#define GNNX_METRICS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gnnx/graph.hpp"
#include "gnnx/mask.hpp"

namespace gnnx {

// Predictions for one explained node. "full" is the model on the whole
// computation graph, "masked" on the explanation alone and "complement" on the
// computation graph with the explanation removed.
struct FidelityInput {
  int y = 0;      // true class
  int y_hat = 0;  // predicted class on the full computation graph
  int y_masked = 0;
  int y_complement = 0;
  std::vector<double> p_full;
  std::vector<double> p_masked;
  std::vector<double> p_complement;
};

enum class FidelityKind { kPlus, kMinus };
enum class FidelityForm { kAcc, kProb };

// Mean over the inputs. Phenomenon focus compares against y, model focus
// against y_hat. The phenomenon prob form is a signed probability drop; the
// model prob form uses absolute drops. Throws std::invalid_argument on an
// empty input.
double fidelity(std::span<const FidelityInput> inputs, FidelityKind kind, FidelityForm form,
                Focus focus);

struct FidelityScores {
  double plus_acc = 0.0;
  double minus_acc = 0.0;
  double plus_prob = 0.0;
  double minus_prob = 0.0;
};

FidelityScores fidelity_scores(std::span<const FidelityInput> inputs, Focus focus);

// Weighted harmonic mean of fid+ and 1 - fid-. Returns 0 when fid+ = 0 or
// fid- = 1. Throws std::invalid_argument unless both weights lie in [0,1]
// and sum to 1, and both fidelities lie in [0,1].
double characterization(double fid_plus, double fid_minus, double w_plus, double w_minus);

// Trapezoidal area under (fid+, 1 - fid-) points after sorting by fid+ and
// clipping to the unit square. Needs at least two points.
double fid_auc(std::vector<std::pair<double, double>> points);

struct GroundTruthScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Set overlap of undirected connections: (u,v) and (v,u) count once. Throws
// std::invalid_argument if the ground truth is empty.
GroundTruthScore groundtruth_accuracy(std::span<const Edge> explanation,
                                      std::span<const Edge> truth);

struct MaskProperties {
  std::size_t size = 0;  // nonzero entries
  double entropy = 0.0;  // natural log, values renormalized to sum 1
  double max_value = 0.0;
  double cc_ratio = 0.0;  // components / connections in the support
};

// `g` supplies the edges the mask is aligned to.
MaskProperties mask_properties(std::span<const double> mask, const Graph& g);

struct TypologyThresholds {
  double sufficient_max_fid_minus = 0.1;
  double necessary_min_fid_plus = 0.6;
};

// Zero, one or both of "necessary" and "sufficient".
std::vector<std::string> typology(double fid_plus, double fid_minus,
                                  const TypologyThresholds& thresholds = {});

}  // namespace gnnx

#endif  // GNNX_METRICS_HPP_
