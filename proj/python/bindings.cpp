// SPDX-License-Identifier: Apache-2.0
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rbf/baselines.hpp"
#include "rbf/channel.hpp"
#include "rbf/config_file.hpp"
#include "rbf/experiments.hpp"
#include "rbf/fp_solver.hpp"
#include "rbf/model.hpp"
#include "rbf/training.hpp"
#include "rbf/unfolding.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace rbf;

PYBIND11_MODULE(rbf, m) {
    m.doc() = "Robust multi-user MISO beamforming: FP, WMMSE, RZF and unfolded UI-DUFP";
    m.attr("__version__") = RBF_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<MissingArtifactError>(m, "MissingArtifactError", PyExc_FileNotFoundError);

    py::enum_<ObjectiveMode>(m, "ObjectiveMode")
        .value("QuadraticOnly", ObjectiveMode::QuadraticOnly)
        .value("FullLDT", ObjectiveMode::FullLDT);
    py::enum_<EvalMode>(m, "EvalMode")
        .value("Surrogate", EvalMode::Surrogate)
        .value("Shannon", EvalMode::Shannon);
    py::enum_<LossMode>(m, "LossMode")
        .value("Standard", LossMode::Standard)
        .value("RobustQuantile", LossMode::RobustQuantile);

    py::class_<SystemConfig>(m, "SystemConfig")
        .def(py::init([](int L, int K, double sigma2, double p_max) {
                 return SystemConfig::make(L, K, sigma2, p_max);
             }),
             "L"_a = 4, "K"_a = 4, "sigma2"_a = 1.0, "p_max"_a = 10.0)
        .def_readwrite("L", &SystemConfig::L)
        .def_readwrite("K", &SystemConfig::K)
        .def_readwrite("sigma2", &SystemConfig::sigma2)
        .def_readwrite("p_max", &SystemConfig::p_max)
        .def_readwrite("weights", &SystemConfig::weights)
        .def_readwrite("gamma", &SystemConfig::gamma)
        .def_readwrite("sigma_h2", &SystemConfig::sigma_h2)
        .def_readwrite("objective_mode", &SystemConfig::objective_mode)
        .def("validate", &SystemConfig::validate);

    py::class_<AuxiliaryState>(m, "AuxiliaryState")
        .def(py::init<>())
        .def_readwrite("g", &AuxiliaryState::g)
        .def_readwrite("u", &AuxiliaryState::u);

    m.def("sample_channels",
          [](std::uint64_t seed, int L, int K, int count) {
              return sample_channels(Seed{seed}, L, K, count);
          },
          "seed"_a, "L"_a, "K"_a, "count"_a);
    m.def("save_channels", &save_channels, "path"_a, "channels"_a);
    m.def("load_channels", &load_channels, "path"_a);
    m.def("inject_uncertainty",
          [](const ChannelMatrix& H, double sigma_h2, int B, std::uint64_t seed) {
              return inject_uncertainty(H, sigma_h2, B, Seed{seed}).samples;
          },
          "H"_a, "sigma_h2"_a, "B"_a, "seed"_a);

    m.def("wsr", &wsr, "H"_a, "V"_a, "config"_a);
    m.def("sinr", &sinr, "H"_a, "V"_a, "sigma2"_a, "k"_a);
    m.def("qt_objective",
          py::overload_cast<const ChannelMatrix&, const BeamformingMatrix&,
                            const AuxiliaryState&, const SystemConfig&>(&qt_objective),
          "H"_a, "V"_a, "aux"_a, "config"_a);
    m.def("refresh_aux", &refresh_aux, "H"_a, "V"_a, "config"_a);
    m.def("project_power", &project_power, "V"_a, "p_max"_a);

    py::class_<SolveTrace>(m, "SolveTrace")
        .def_readonly("objective", &SolveTrace::objective)
        .def_readonly("wsr", &SolveTrace::wsr)
        .def_readonly("iterations", &SolveTrace::iterations)
        .def_readonly("converged", &SolveTrace::converged);
    py::class_<FpResult>(m, "FpResult")
        .def_readonly("V", &FpResult::V)
        .def_readonly("aux", &FpResult::aux)
        .def_readonly("trace", &FpResult::trace);
    py::class_<WmmseResult>(m, "WmmseResult")
        .def_readonly("V", &WmmseResult::V)
        .def_readonly("trace", &WmmseResult::trace);

    m.def("run_fp",
          [](const ChannelMatrix& H, const SystemConfig& config, int max_iters, double rel_tol) {
              FpSettings s;
              s.max_iters = max_iters;
              s.rel_tol = rel_tol;
              return run_fp(H, config, s);
          },
          "H"_a, "config"_a, "max_iters"_a = 100, "rel_tol"_a = 1e-6);
    m.def("run_wmmse",
          [](const ChannelMatrix& H, const SystemConfig& config, int max_iters, double rel_tol) {
              WmmseSettings s;
              s.max_iters = max_iters;
              s.rel_tol = rel_tol;
              return run_wmmse(H, config, s);
          },
          "H"_a, "config"_a, "max_iters"_a = 100, "rel_tol"_a = 1e-6);
    m.def("rzf_beamformer", &rzf_beamformer, "H"_a, "alpha"_a, "config"_a);

    py::class_<StepSizeSchedule>(m, "StepSizeSchedule")
        .def(py::init<int, int, double>(), "layers"_a, "steps"_a, "value"_a = 1.0)
        .def(py::init<RMatrix>(), "mu"_a)
        .def_property_readonly("layers", &StepSizeSchedule::layers)
        .def_property_readonly("steps", &StepSizeSchedule::steps)
        .def_property_readonly("mu", py::overload_cast<>(&StepSizeSchedule::values, py::const_));
    m.def("save_schedule", &save_schedule, "path"_a, "schedule"_a);
    m.def("load_schedule", &load_schedule, "path"_a);

    m.def("grad_v_objective", &grad_v_objective, "H"_a, "V"_a, "aux"_a, "config"_a);
    m.def("unfold",
          [](const ChannelMatrix& H, const StepSizeSchedule& s, const SystemConfig& config) {
              return forward(H, s, config).V;
          },
          "H"_a, "schedule"_a, "config"_a);

    m.def("quantile_select",
          [](const std::vector<double>& values, double gamma) {
              const QuantilePick p = quantile_select(values, gamma);
              return py::make_tuple(p.value, p.index);
          },
          "values"_a, "gamma"_a);
    m.def("eval_robust_wsr",
          [](const BeamformingMatrix& V, const AuxiliaryState& aux, const ChannelMatrix& H,
             double sigma_h2, int B, double gamma, EvalMode mode, std::uint64_t seed,
             const SystemConfig& config) {
              return eval_robust_wsr(V, aux, H, sigma_h2, B, gamma, mode, Seed{seed}, config);
          },
          "V"_a, "aux"_a, "H"_a, "sigma_h2"_a, "B"_a, "gamma"_a, "mode"_a, "seed"_a, "config"_a);

    m.def("train",
          [](const SystemConfig& config, int layers, int steps, int batches, int batch_size, int B,
             double learning_rate, LossMode loss_mode, std::uint64_t seed, int threads) {
              TrainConfig tc;
              tc.batches = batches;
              tc.batch_size = batch_size;
              tc.B = B;
              tc.gamma = config.gamma;
              tc.learning_rate = learning_rate;
              tc.loss_mode = loss_mode;
              tc.seed = Seed{seed};
              tc.threads = threads;
              tc.heldout_every = batches;
              TrainResult r;
              {
                  py::gil_scoped_release release;
                  r = train(tc, config, layers, steps);
              }
              return py::make_tuple(r.schedule, r.history.loss);
          },
          "config"_a, "layers"_a, "steps"_a, "batches"_a = 200, "batch_size"_a = 16, "B"_a = 200,
          "learning_rate"_a = 1e-2, "loss_mode"_a = LossMode::RobustQuantile, "seed"_a = 1,
          "threads"_a = 1);
}
