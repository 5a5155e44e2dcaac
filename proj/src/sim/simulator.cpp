#include "sbice/sim/simulator.hpp"

#include "sbice/errors.hpp"
#include "sbice/sim/external.hpp"

namespace sbice {
namespace {

template <class... F>
struct Overloaded : F... {
  using F::operator()...;
};
template <class... F>
Overloaded(F...) -> Overloaded<F...>;

}  // namespace

void SimulatorConfig::validate() const {
  if (sample_size < 2) throw ConfigError("simulator sample_size must be at least 2");
  std::visit(Overloaded{
                 [](const BuiltinLinearConfig&) {},
                 [](const FrugalConfig& f) { f.validate(); },
                 [](const ExternalConfig& e) {
                   if (e.command.empty() || e.command.front().empty()) {
                     throw ConfigError("external simulator needs a command");
                   }
                   if (!(e.timeout_seconds > 0.0)) {
                     throw ConfigError("external simulator timeout must be positive");
                   }
                 },
             },
             variant);
}

std::vector<std::string> SimulatorConfig::parameter_names() const {
  return std::visit(
      Overloaded{
          [](const BuiltinLinearConfig& b) { return linear_parameter_names(b.model); },
          [](const FrugalConfig& f) { return f.parameter_names(); },
          [](const ExternalConfig& e) { return e.parameters; },
      },
      variant);
}

Simulator::Simulator(SimulatorConfig config) : config_(std::move(config)) {
  config_.validate();
  if (const auto* ext = std::get_if<ExternalConfig>(&config_.variant)) {
    pool_ = std::make_unique<ExternalWorkerPool>(*ext);
  }
}

Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;

GeneratedDataset Simulator::simulate(const ThetaVector& theta,
                                     const RandomStream& stream) const {
  return simulate(theta, stream, config_.sample_size);
}

GeneratedDataset Simulator::simulate(const ThetaVector& theta, const RandomStream& stream,
                                     Eigen::Index n) const {
  return std::visit(
      Overloaded{
          [&](const BuiltinLinearConfig& b) {
            Dataset d = simulate_linear(b.model, theta, n, config_.source.get(), stream);
            return GeneratedDataset{std::move(d), theta, theta.find("tau")};
          },
          [&](const FrugalConfig& f) { return frugal_simulate(f, theta, stream, n); },
          [&](const ExternalConfig& e) {
            if (!e.parameters.empty()) theta.require_names(e.parameters);
            Dataset d = pool_->request(theta, n, stream.derived_seed());
            return GeneratedDataset{std::move(d), theta, theta.find("tau")};
          },
      },
      config_.variant);
}

GeneratedDataset simulate(const SimulatorConfig& config, const ThetaVector& theta,
                          const RandomStream& stream) {
  return Simulator(config).simulate(theta, stream);
}

}  // namespace sbice
