#include "bessplan/csv.hpp"
#include "bessplan/dispatch.hpp"
#include "bessplan/lp.hpp"
#include "bessplan/market.hpp"
#include "bessplan/network.hpp"
#include "bessplan/scheduling.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>

namespace py = pybind11;
using namespace bessplan;

namespace {

// A loaded case with its shift factors, kept alive for repeated calls.
struct PyCase {
    PowerNetwork net;
    BusLoads loads;
    PtdfMatrix ptdf;

    std::vector<int> bus_ids() const
    {
        std::vector<int> ids;
        for (const auto& b : net.buses)
            ids.push_back(b.id);
        return ids;
    }
};

PyCase open_case(const std::string& dir, std::optional<std::string> loads, double period_hours)
{
    PyCase c;
    c.net = load_network(dir);
    const std::filesystem::path lp = loads ? std::filesystem::path(*loads) : std::filesystem::path(dir) / "loads.csv";
    c.loads = make_bus_loads(c.net, load_series(lp, c.net), period_hours);
    c.ptdf = compute_ptdf(c.net);
    return c;
}

py::dict solve_lp_dense(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& row_lower,
                        const Eigen::VectorXd& row_upper, const Eigen::VectorXd& var_lower,
                        const Eigen::VectorXd& var_upper)
{
    lp::LinearProgram prob;
    for (Eigen::Index j = 0; j < c.size(); ++j)
        prob.add_variable(c(j), var_lower(j), var_upper(j));
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        std::vector<lp::Coefficient> row;
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            if (A(i, j) != 0.0)
                row.push_back({static_cast<int>(j), A(i, j)});
        const double lo = row_lower(i), hi = row_upper(i);
        lp::RowKind kind = lp::RowKind::Range;
        if (lo == hi)
            kind = lp::RowKind::Equal;
        else if (lo == -lp::kInf)
            kind = lp::RowKind::LessEqual;
        else if (hi == lp::kInf)
            kind = lp::RowKind::GreaterEqual;
        prob.add_row(kind, lo, hi, row);
    }
    const auto sol = lp::solve_lp(prob);
    py::dict d;
    d["status"] = lp::to_string(sol.status);
    d["x"] = sol.primal;
    d["objective"] = sol.objective_value;
    d["duals"] = sol.row_duals;
    d["degenerate"] = sol.degenerate;
    return d;
}

py::dict dispatch(const PyCase& c, int first, int count)
{
    if (count <= 0)
        count = c.loads.periods() - first;
    const auto sol = run_dispatch(c.net, c.ptdf, c.loads, BidSet{}, first, count);
    py::dict d;
    d["lmps"] = extract_lmps(sol, c.ptdf);
    d["generation"] = sol.generation;
    d["flows"] = sol.flows;
    d["total_cost"] = sol.total_cost;
    d["congestion"] = congestion_score(sol, c.ptdf).score;
    return d;
}

py::dict aus(const PyCase& c, const std::string& catalog_csv, const std::map<int, double>& capacities, double budget,
             int first, int count, double epsilon, int max_iter, double margin)
{
    const auto catalog = load_catalog(catalog_csv);
    BessConfig cfg;
    cfg.budget = budget;
    cfg.capacity.assign(catalog.size(), 0.0);
    for (const auto& [id, mwh] : capacities) {
        bool found = false;
        for (std::size_t i = 0; i < catalog.size(); ++i)
            if (catalog[i].id == id) {
                cfg.capacity[i] = mwh;
                found = true;
            }
        if (!found)
            throw InputError("unknown candidate " + std::to_string(id));
    }
    if (count <= 0)
        count = c.loads.periods() - first;
    AusParams params;
    params.epsilon = epsilon;
    params.max_iter = max_iter;
    params.strategy = std::make_shared<MarginStrategy>(margin);
    const auto res = run_aus(MarketWindow{c.net, c.ptdf, c.loads, first, count}, catalog, cfg, params);
    py::list deltas;
    for (const auto& it : res.trace)
        deltas.append(it.delta);
    py::dict d;
    d["converged"] = res.report.converged;
    d["iterations"] = res.report.iterations;
    d["final_delta"] = res.report.final_delta;
    d["deltas"] = deltas;
    d["base_lmps"] = res.base_lmps;
    d["lmps"] = res.lmps;
    d["charge"] = res.schedule.charge;
    d["discharge"] = res.schedule.discharge;
    d["soc"] = res.schedule.soc;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Battery storage siting: LP solver, DC dispatch and market simulation";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<DispatchInfeasible>(m, "DispatchInfeasible", PyExc_RuntimeError);

    m.def("solve_lp", &solve_lp_dense, py::arg("c"), py::arg("A"), py::arg("row_lower"), py::arg("row_upper"),
          py::arg("var_lower"), py::arg("var_upper"),
          "Solve min c'x s.t. row_lower <= A x <= row_upper, var_lower <= x <= var_upper.");

    py::class_<PyCase>(m, "Case")
        .def(py::init(&open_case), py::arg("directory"), py::arg("loads") = py::none(), py::arg("period_hours") = 1.0)
        .def_property_readonly("bus_ids", &PyCase::bus_ids)
        .def_property_readonly("periods", [](const PyCase& c) { return c.loads.periods(); })
        .def_property_readonly("ptdf", [](const PyCase& c) { return c.ptdf.factors; })
        .def("dispatch", &dispatch, py::arg("first") = 0, py::arg("count") = 0)
        .def("aus", &aus, py::arg("catalog"), py::arg("capacities"), py::arg("budget"), py::arg("first") = 0,
             py::arg("count") = 0, py::arg("epsilon") = 1e-3, py::arg("max_iter") = 10, py::arg("margin") = 0.05);
}
