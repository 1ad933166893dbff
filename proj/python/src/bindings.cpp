#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tnlab/errors.hpp"
#include "tnlab/experiments.hpp"
#include "tnlab/lyapunov.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/spectral.hpp"

namespace py = pybind11;
using namespace tnlab;

namespace {

// Square array of samples on the uniform grid of [0,1)^2.
SpectralField from_samples(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InputError("expected a square 2-d array");
    PhysicalField p(TorusGrid(2, static_cast<int>(a.shape(0))), 1);
    std::copy(a.data(), a.data() + a.size(), p.values.begin());
    return to_spectral(p);
}

std::vector<int> pair_k(const std::vector<int>& k) {
    if (k.size() != 2) throw InputError("wavevector must have two entries");
    return k;
}

}  // namespace

PYBIND11_MODULE(_tnlab, m) {
    m.doc() = "Transport-noise mean-field lab";
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<SolverAbort>(m, "SolverAbort", PyExc_RuntimeError);

    m.attr("__version__") = library_version();
    m.attr("MANIFEST_SCHEMA_VERSION") = kManifestSchemaVersion;
    m.def("experiment_ids", &experiment_ids);
    m.def("criterion_ids", &criterion_ids);

    m.def(
        "resolve_config",
        [](const std::string& experiment, const std::string& config) {
            return resolve_config(experiment, Json::parse(config)).dump();
        },
        py::arg("experiment"), py::arg("config") = "{}");
    m.def(
        "run_experiment",
        [](const std::string& experiment, const std::string& config, std::optional<std::uint64_t> seed, int workers,
           const std::string& out_dir) {
            RunOptions opts{seed, workers, out_dir};
            py::gil_scoped_release release;
            return run_experiment(experiment, Json::parse(config), opts).dump();
        },
        py::arg("experiment"), py::arg("config") = "{}", py::arg("seed") = py::none(), py::arg("workers") = 0,
        py::arg("out_dir") = "");
    m.def(
        "check_acceptance",
        [](const std::vector<std::string>& manifests) {
            std::vector<Json> parsed;
            for (const auto& s : manifests) parsed.push_back(Json::parse(s));
            Json out = Json::array();
            for (const auto& c : check_acceptance(parsed)) {
                out.push_back({{"id", c.id}, {"status", c.status}, {"detail", c.detail}, {"measured", c.measured}});
            }
            return out.dump();
        },
        py::arg("manifests"));

    m.def(
        "acw_simulate",
        [](double a, double b, double K, double T, double dt, std::size_t ensemble, std::uint64_t seed, int workers) {
            AcwOptions opt;
            opt.T = T;
            opt.dt = dt;
            opt.ensemble = ensemble;
            opt.workers = workers;
            LyapunovEstimate e;
            {
                py::gil_scoped_release release;
                e = acw_simulate({a, b, K}, opt, RngStream(seed, 0));
            }
            py::dict d;
            d["value"] = e.value;
            d["stderr"] = e.std_error;
            d["members"] = e.members;
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("K"), py::arg("T") = 200.0, py::arg("dt") = 0.0, py::arg("ensemble") = 32,
        py::arg("seed") = 1, py::arg("workers") = 0);
    m.def(
        "acw_fk_quadrature", [](double a, double b, double K, int res) { return acw_fk_quadrature({a, b, K}, res); },
        py::arg("a"), py::arg("b"), py::arg("K"), py::arg("angular_resolution") = 4096);

    m.def(
        "normalization_constant",
        [](const std::string& form, const std::vector<int>& k) {
            if (form == "single_mode") return normalization_constant(PotentialSpec::single_mode(pair_k(k)), 2);
            if (form == "two_mode") return normalization_constant(PotentialSpec::two_mode(pair_k(k)), 2);
            throw InputError("form must be single_mode or two_mode");
        },
        py::arg("form"), py::arg("k"));
    m.def(
        "stability_report",
        [](double nu, const std::vector<int>& k, double K, int points) {
            const TorusGrid g(2, points);
            const auto W = fourier_potential(PotentialSpec::single_mode(pair_k(k)), g);
            const auto r = stability_report(W, nu, NoiseSpec::uniform_shells(2, 1, 1.0, K));
            py::dict d;
            d["K_crit"] = r.K_crit;
            d["max_eigenvalue"] = r.max_eigenvalue;
            d["C_d"] = r.C_d;
            d["theta_hm1_squared"] = r.theta_hm1_squared;
            d["best_nu_prime"] = r.best.nu_prime;
            d["lyapunov_bound"] = lyapunov_bound(r, K);
            return d;
        },
        py::arg("nu"), py::arg("k") = std::vector<int>{1, 1}, py::arg("K") = 0.0, py::arg("points") = 32);
    m.def(
        "steady_state",
        [](double nu, const std::vector<int>& k, int points, double amplitude) {
            const TorusGrid g(2, points);
            const auto W = fourier_potential(PotentialSpec::single_mode(pair_k(k)), g);
            auto init = SpectralField::constant(g, 1.0);
            init.set_mode({k[0], k[1]}, amplitude / 4);
            init.set_mode({k[0], -k[1]}, amplitude / 4);
            const auto r = steady_state_fixed_point(nu, W, init, 0.5, 1e-10, 10000);
            py::dict d;
            d["order_parameter"] = std::abs(r.rho.coefficient({k[0], k[1]}));
            d["free_energy"] = free_energy(r.rho, nu, W);
            d["converged"] = r.converged;
            d["iterations"] = r.iterations;
            return d;
        },
        py::arg("nu"), py::arg("k") = std::vector<int>{1, 1}, py::arg("points") = 32, py::arg("amplitude") = 0.1);

    m.def(
        "sobolev_norm", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& u,
                           double s) { return sobolev_norm(from_samples(u), s); },
        py::arg("samples"), py::arg("s"));
}
