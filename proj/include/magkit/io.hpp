#pragma once

#include <string>
#include <vector>

#include "magkit/branching.hpp"
#include "magkit/dynamics.hpp"
#include "magkit/entropic.hpp"

namespace magkit {

// Shortest round-trip decimal rendering (17 significant digits at most).
// Every emitted artifact goes through this so reruns are byte-identical.
std::string fmt(double x);

std::string trajectory_csv(const Trajectory& traj);
std::string events_jsonl(const std::vector<ShockEvent>& events);

std::string cloud_csv(const std::vector<EmpiricalCloud>& snapshots);
std::string branch_events_jsonl(const std::vector<BranchEvent>& events);

std::string density_csv(const GridDensity& d);
std::string flow_csv(const GridFlow& f);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Minimal deterministic SVG canvas: fixed viewport, data mapped into it.
class SvgCanvas {
public:
    SvgCanvas(double xmin, double xmax, double ymin, double ymax);

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& stroke);
    void circle(double x, double y, double radius_px, const std::string& fill);
    void text(double px, double py, const std::string& msg);
    void axes();
    std::string finish();

    static constexpr int kWidth = 800;
    static constexpr int kHeight = 600;

private:
    double sx(double x) const;
    double sy(double y) const;
    double xmin_, xmax_, ymin_, ymax_;
    std::string body_;
};

}  // namespace magkit
