#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drsurv/censoring.hpp"
#include "drsurv/curve.hpp"
#include "drsurv/data.hpp"

namespace drsurv {

/// What the network output feeds: a Cox risk score (linear output), an
/// anchored survival probability (sigmoid), a mean survival time (exp), or an
/// exponential rate parameter (exp).
enum class Target { CoxBeta, SurvivalProb, MeanTime, ParametricParams };

enum class OutputActivation { Sigmoid, Linear, Exp };

OutputActivation activation_for(Target target);

/// Fully connected ReLU network with a single output node.
struct Mlp {
  std::vector<Eigen::MatrixXd> W;
  std::vector<Eigen::VectorXd> b;
  OutputActivation output = OutputActivation::Linear;

  /// Uniform init on [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
  static Mlp init(const std::vector<int>& sizes, OutputActivation out, Rng& rng);

  int input_dim() const { return static_cast<int>(W.front().cols()); }
  std::vector<int> layer_sizes() const;

  double forward_raw(const Eigen::VectorXd& x) const;
  double forward(const Eigen::VectorXd& x) const;  ///< output activation applied

  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& theta);
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;  ///< Adam step size
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<int> hidden = {32, 32};
  double validation_fraction = 0.2;
  Target target = Target::CoxBeta;
  std::uint64_t seed = 1;
};

/// One training batch with everything the weighted complete-case loss needs.
/// weight[i] is the precomputed complete_i / G(time_i | r_i); the risk sets
/// for the CoxBeta loss are formed within the batch.
struct NnBatch {
  std::vector<Eigen::VectorXd> x;
  std::vector<double> time;
  std::vector<double> weight;
  std::vector<double> entry;  ///< empty = no delayed entry
  Target target = Target::CoxBeta;
  double t_anchor = 1.0;
};

/// IPW-weighted mean complete-case loss over the batch. This is the quantity
/// the training gradient differentiates; the DR augmentation is frozen per
/// step and adds no gradient.
double nn_batch_loss(const Mlp& net, const NnBatch& batch);

/// Analytic gradients of nn_batch_loss for every weight and bias.
void nn_batch_gradients(const Mlp& net, const NnBatch& batch, std::vector<Eigen::MatrixXd>& gw,
                        std::vector<Eigen::VectorXd>& gb);

/// Per-record complete-case losses over a dataset (risk sets over the whole
/// dataset for CoxBeta); the losses vector the DR functionals consume.
std::vector<double> complete_case_losses(const Mlp& net, const Dataset& data, Target target, double t_anchor,
                                         const std::function<Eigen::VectorXd(const SubjectRecord&)>& features);

/// Trained survival predictor.
struct NnSurvivalModel {
  Mlp net;
  Target target = Target::CoxBeta;
  CumulativeHazard baseline{CumulativeHazard::step({}, {})};  ///< CoxBeta mode
  double t_anchor = 0.0;  ///< max observed event time in the training data
  std::vector<double> train_loss;  ///< per-epoch DR loss on the training split
  std::vector<double> val_loss;    ///< per-epoch DR loss on the validation split

  SurvivalCurve predict_curve(const Eigen::VectorXd& x) const;
  double predict_mean(const Eigen::VectorXd& x) const;

  std::string checkpoint_json(const TrainConfig& cfg) const;
};

/// Trains against the doubly robust LTRC loss: gradients flow through the
/// IPW-weighted complete-case term with the censoring model and conditional
/// loss frozen, and both DR loss splits are recorded every epoch. In CoxBeta
/// mode the Breslow baseline is attached from the trained risk scores.
NnSurvivalModel train_nn(const Dataset& data, const TrainConfig& cfg, const CensoringModel& g,
                         const std::function<Eigen::VectorXd(const SubjectRecord&)>& features);

/// train_nn with features = record covariates x.
NnSurvivalModel train_nn(const Dataset& data, const TrainConfig& cfg, const CensoringModel& g);

}  // namespace drsurv
