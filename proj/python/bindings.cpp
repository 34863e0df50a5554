#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "evwarn/direction.hpp"
#include "evwarn/geo.hpp"
#include "evwarn/grid.hpp"
#include "evwarn/latency.hpp"
#include "evwarn/scenario.hpp"
#include "evwarn/sim.hpp"
#include "evwarn/threat.hpp"

namespace py = pybind11;
using namespace evwarn;

PYBIND11_MODULE(_evwarn, m) {
    m.doc() = "collision-warning toolkit: trajectory geometry, grid threat "
              "grading, latency budgeting, and the pipeline simulator";

    py::class_<CartPoint>(m, "CartPoint")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return CartPoint{x, y}; }),
             py::arg("x"), py::arg("y"))
        .def_readwrite("x", &CartPoint::x)
        .def_readwrite("y", &CartPoint::y)
        .def("__repr__", [](const CartPoint& p) {
            std::ostringstream os;
            os << "CartPoint(" << p.x << ", " << p.y << ")";
            return os.str();
        });

    py::class_<GeoPoint>(m, "GeoPoint")
        .def(py::init<>())
        .def(py::init([](double lat, double lon) { return GeoPoint{lat, lon}; }),
             py::arg("lat"), py::arg("lon"))
        .def_readwrite("lat", &GeoPoint::lat)
        .def_readwrite("lon", &GeoPoint::lon);

    m.def("to_cartesian", &to_cartesian, py::arg("point"), py::arg("origin"),
          "project geodetic coordinates onto the local grid plane, meters");
    m.def("from_cartesian", &from_cartesian, py::arg("point"), py::arg("origin"),
          "inverse of to_cartesian");
    m.def("distance", &distance, py::arg("a"), py::arg("b"));

    py::class_<Trajectory>(m, "Trajectory")
        .def_static("from_bearing", &Trajectory::from_bearing, py::arg("origin"),
                    py::arg("bearing_deg"), py::arg("speed_mps"))
        .def_readonly("origin", &Trajectory::origin)
        .def_readonly("bearing_deg", &Trajectory::bearing_deg)
        .def_readonly("speed_mps", &Trajectory::speed_mps)
        .def_readonly("theta", &Trajectory::theta)
        .def("position_at", &Trajectory::position_at, py::arg("elapsed_s"));

    py::class_<IntersectionSolution>(m, "IntersectionSolution")
        .def_readonly("t_u", &IntersectionSolution::t_u)
        .def_readonly("t_s", &IntersectionSolution::t_s)
        .def_readonly("point", &IntersectionSolution::point)
        .def_readonly("eta_u", &IntersectionSolution::eta_u)
        .def_readonly("eta_s", &IntersectionSolution::eta_s);

    py::class_<IntersectResult>(m, "IntersectResult")
        .def_property_readonly(
            "kind", [](const IntersectResult& r) { return to_string(r.kind); })
        .def_readonly("solution", &IntersectResult::solution)
        .def("intersects", &IntersectResult::intersects);

    m.def("intersect", &intersect, py::arg("user"), py::arg("object"),
          "forward-ray crossing of two trajectories");

    py::class_<Cell>(m, "Cell")
        .def_readonly("col", &Cell::col)
        .def_readonly("row", &Cell::row)
        .def_readonly("size", &Cell::size)
        .def("__repr__", [](const Cell& c) { return cell_name(c); })
        .def("__eq__", [](const Cell& a, const Cell& b) { return a == b; });

    m.def("cell_of", &cell_of, py::arg("point"),
          py::arg("cell_size") = kDefaultCellSizeM);
    m.def("cell_name", &cell_name, py::arg("cell"));
    m.def(
        "parse_cell_name",
        [](const std::string& name, double cell_size) {
            return parse_cell_name(name, cell_size);
        },
        py::arg("name"), py::arg("cell_size") = kDefaultCellSizeM);
    m.def(
        "neighborhood_names",
        [](const Cell& c) {
            std::vector<std::string> names;
            for (const auto& member : neighborhood(c).members) {
                if (member) names.push_back(cell_name(*member));
            }
            return names;
        },
        py::arg("cell"), "names of the existing cells around this one");

    py::class_<UserState>(m, "UserState")
        .def(py::init([](std::string id, Trajectory t, double cell_size) {
                 UserState u;
                 u.id = std::move(id);
                 u.trajectory = t;
                 u.cell = cell_of(t.origin, cell_size);
                 return u;
             }),
             py::arg("id"), py::arg("trajectory"),
             py::arg("cell_size") = kDefaultCellSizeM)
        .def_readonly("id", &UserState::id)
        .def_readonly("trajectory", &UserState::trajectory)
        .def_readonly("cell", &UserState::cell);

    py::class_<SensorState>(m, "SensorState")
        .def(py::init([](std::string id, Trajectory t, bool event_active,
                         double cell_size) {
                 SensorState s;
                 s.id = std::move(id);
                 s.trajectory = t;
                 s.cell = cell_of(t.origin, cell_size);
                 s.event_active = event_active;
                 return s;
             }),
             py::arg("id"), py::arg("trajectory"), py::arg("event_active") = false,
             py::arg("cell_size") = kDefaultCellSizeM)
        .def_readonly("id", &SensorState::id)
        .def_readonly("trajectory", &SensorState::trajectory)
        .def_readonly("cell", &SensorState::cell)
        .def_readonly("event_active", &SensorState::event_active);

    py::class_<ThreatVerdict>(m, "ThreatVerdict")
        .def_property_readonly(
            "level", [](const ThreatVerdict& v) { return to_string(v.level); })
        .def_readonly("rationale", &ThreatVerdict::rationale)
        .def_readonly("intersection", &ThreatVerdict::intersection);

    m.def("classify", &classify, py::arg("user"), py::arg("sensor"),
          "threat level of one sensor detection for one user");
    m.def(
        "applicability",
        [](const UserState& u, const SensorState& s) {
            return std::string(to_string(applicability(u, s)));
        },
        py::arg("user"), py::arg("sensor"));

    m.def(
        "network_budget",
        [](double t_tot, double t_s, double t_p, double t_c, double eval_share) {
            py::dict out;
            try {
                const BudgetResult r =
                    solve_network_budget(t_tot, t_s, t_p, t_c, eval_share);
                out["feasible"] = true;
                out["t_tot_ms"] = r.t_tot_target;
                out["compute_ms"] = r.compute_sum;
                out["network_allowance_ms"] = r.network_allowance_total;
                out["t_eval_ms"] = r.t_eval_alloc;
                out["t_exe_ms"] = r.t_exe_alloc;
            } catch (const BudgetInfeasible& e) {
                out["feasible"] = false;
                out["deficit_ms"] = e.deficit_ms;
            }
            return out;
        },
        py::arg("t_tot") = LatencyConstants{}.t_max,
        py::arg("t_s") = LatencyConstants{}.t_s(),
        py::arg("t_p") = LatencyConstants{}.t_p(),
        py::arg("t_c") = LatencyConstants{}.t_c, py::arg("eval_share") = 0.5,
        "split the deadline into per-hop network allowances");

    m.def(
        "impact_velocity",
        [](double latency_ms, double k) {
            const ImpactVelocity v = impact_velocity(latency_ms, k);
            return py::make_tuple(v.mps, v.kmh);
        },
        py::arg("latency_ms"), py::arg("k") = LatencyConstants{}.k_impact,
        "(m/s, km/h) of residual collision speed for a given latency");
    m.def(
        "braking_distance",
        [](double v, double a_b) {
            return braking_distance(BrakingModel{v, a_b, 7.63});
        },
        py::arg("v") = 20.0, py::arg("a_b") = 8.53);
    m.def(
        "stopping_time",
        [](double v, double a_b) {
            return stopping_time(BrakingModel{v, a_b, 7.63});
        },
        py::arg("v") = 20.0, py::arg("a_b") = 8.53);

    m.def("default_scenario_json",
          [] { return sim::scenario_to_json(sim::default_scenario()); });
    m.def(
        "run_simulation",
        [](const std::string& scenario_json, const std::string& base_dir,
           const std::string& csv_out) {
            const sim::Scenario sc =
                sim::scenario_from_json(scenario_json, base_dir);
            const sim::SimOutput out = sim::run(sc);
            if (!csv_out.empty()) sim::export_csv_file(out.records, csv_out);
            py::dict d;
            d["records"] = out.records.size();
            d["summary_json"] = sim::summary_to_json(out.summary, 0);
            std::ostringstream csv;
            sim::export_csv(out.records, csv);
            d["csv"] = csv.str();
            return d;
        },
        py::arg("scenario_json"), py::arg("base_dir") = "",
        py::arg("csv_out") = "",
        "run the pipeline simulator on a scenario document");

    py::class_<BoundingBox>(m, "BoundingBox")
        .def(py::init([](double x, double y, double w, double h,
                         std::string class_label, const std::string& view) {
                 BoundingBox b;
                 b.x = x;
                 b.y = y;
                 b.w = w;
                 b.h = h;
                 b.class_label = std::move(class_label);
                 if (view == "front") {
                     b.view = ViewLabel::Front;
                 } else if (view == "rear") {
                     b.view = ViewLabel::Rear;
                 } else if (!view.empty()) {
                     throw std::invalid_argument("view must be front, rear or empty");
                 }
                 return b;
             }),
             py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"),
             py::arg("class_label") = "vehicle", py::arg("view") = "");

    m.def(
        "vote_heading",
        [](const BoundingBox& box,
           const std::vector<std::pair<std::vector<std::pair<double, double>>, int>>&
               zones,
           double frame_h, double beta) {
            std::vector<LaneZone> lane_zones;
            for (const auto& [poly, vote] : zones) {
                LaneZone z;
                for (const auto& [x, y] : poly) z.polygon.push_back({x, y});
                z.vote = vote;
                lane_zones.push_back(std::move(z));
            }
            return std::string(to_string(classify_box(box, lane_zones, frame_h, beta)));
        },
        py::arg("box"), py::arg("lane_zones"), py::arg("frame_h"),
        py::arg("beta") = 0.2,
        "three-detector direction vote for one detection box");
}
