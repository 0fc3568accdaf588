#include "magkit/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace magkit {

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "clock,time";
    const std::size_t dim = traj.positions.empty() ? 0 : traj.positions.front().size();
    for (std::size_t c = 0; c < dim; ++c) out += ",pos_" + std::to_string(c);
    if (traj.has_velocities())
        for (std::size_t c = 0; c < dim; ++c) out += ",vel_" + std::to_string(c);
    out += "\n";
    const char clock = traj.clock == Clock::S ? 's' : 't';
    for (std::size_t j = 0; j < traj.times.size(); ++j) {
        out += clock;
        out += ',';
        out += fmt(traj.times[j]);
        for (double c : traj.positions[j]) {
            out += ',';
            out += fmt(c);
        }
        if (traj.has_velocities())
            for (double c : traj.velocities[j]) {
                out += ',';
                out += fmt(c);
            }
        out += '\n';
    }
    return out;
}

std::string events_jsonl(const std::vector<ShockEvent>& events) {
    std::string out;
    for (const ShockEvent& e : events) {
        out += "{\"time\":" + fmt(e.time) + ",\"pre_force\":" + fmt(e.pre_force) +
               ",\"post_force\":" + fmt(e.post_force) +
               ",\"tie_size\":" + std::to_string(e.tie_size) + "}\n";
    }
    return out;
}

std::string cloud_csv(const std::vector<EmpiricalCloud>& snapshots) {
    std::string out = "time,particle_id";
    const std::size_t dim =
        snapshots.empty() || snapshots.front().points.empty() ? 0 : snapshots.front().points.front().size();
    for (std::size_t c = 0; c < dim; ++c) out += ",coord_" + std::to_string(c);
    out += "\n";
    for (const EmpiricalCloud& cloud : snapshots) {
        for (std::size_t i = 0; i < cloud.points.size(); ++i) {
            out += fmt(cloud.time);
            out += ',';
            out += std::to_string(i);
            for (double c : cloud.points[i]) {
                out += ',';
                out += fmt(c);
            }
            out += '\n';
        }
    }
    return out;
}

std::string branch_events_jsonl(const std::vector<BranchEvent>& events) {
    std::string out;
    for (const BranchEvent& e : events) {
        out += "{\"time\":" + fmt(e.time) + ",\"added\":" + std::to_string(e.added.size()) +
               ",\"removed\":" + std::to_string(e.removed.size()) +
               ",\"wasserstein_jump\":" + fmt(e.wasserstein_jump) +
               ",\"bound_rhs\":" + fmt(e.bound_rhs) +
               ",\"within_bound\":" + (e.within_bound ? "true" : "false") + "}\n";
    }
    return out;
}

std::string density_csv(const GridDensity& d) {
    std::string out = "x,value\n";
    for (int i = 0; i < d.grid.n; ++i) out += fmt(d.grid.x(i)) + "," + fmt(d.values[i]) + "\n";
    return out;
}

std::string flow_csv(const GridFlow& f) {
    std::string out = "t,x,value\n";
    for (std::size_t j = 0; j < f.times.size(); ++j)
        for (int i = 0; i < f.grid().n; ++i)
            out += fmt(f.times[j]) + "," + fmt(f.grid().x(i)) + "," + fmt(f.slices[j].values[i]) + "\n";
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot open for writing: " + path);
    f << content;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw validation_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SvgCanvas::SvgCanvas(double xmin, double xmax, double ymin, double ymax)
    : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax) {
    if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
    if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
}

double SvgCanvas::sx(double x) const {
    return 40.0 + (x - xmin_) / (xmax_ - xmin_) * (kWidth - 60.0);
}

double SvgCanvas::sy(double y) const {
    return kHeight - 40.0 - (y - ymin_) / (ymax_ - ymin_) * (kHeight - 60.0);
}

void SvgCanvas::polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::string& stroke) {
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) body_ += ' ';
        body_ += fmt(sx(xs[i])) + "," + fmt(sy(ys[i]));
    }
    body_ += "\"/>\n";
}

void SvgCanvas::circle(double x, double y, double radius_px, const std::string& fill) {
    body_ += "<circle cx=\"" + fmt(sx(x)) + "\" cy=\"" + fmt(sy(y)) + "\" r=\"" + fmt(radius_px) +
             "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::text(double px, double py, const std::string& msg) {
    body_ += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(py) + "\" font-size=\"13\">" + msg +
             "</text>\n";
}

void SvgCanvas::axes() {
    body_ += "<rect x=\"40\" y=\"20\" width=\"" + fmt(kWidth - 60.0) + "\" height=\"" +
             fmt(kHeight - 60.0) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    text(6.0, kHeight - 36.0, fmt(ymin_));
    text(6.0, 32.0, fmt(ymax_));
    text(40.0, kHeight - 8.0, fmt(xmin_));
    text(kWidth - 120.0, kHeight - 8.0, fmt(xmax_));
}

std::string SvgCanvas::finish() {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
           "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " + std::to_string(kWidth) +
           " " + std::to_string(kHeight) + "\">\n" + body_ + "</svg>\n";
}

}  // namespace magkit
