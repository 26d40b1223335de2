#include "fblab/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fblab/diagnostics.hpp"

namespace fblab::blowup {

namespace {

Point image(const Point& x, double r, const Point& y, int dim) {
    Point p{};
    for (int a = 0; a < dim; ++a) {
        p[a] = x[a] + r * y[a];
    }
    return p;
}

void require_image(const GridDomain& source, const Point& x, double r, const GridDomain& target, const char* what) {
    if (!(r > 0.0)) {
        throw InvalidArgument(std::string(what) + ": radius must be positive");
    }
    if (source.dim() != target.dim()) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch");
    }
    Point hi{};
    for (int a = 0; a < target.dim(); ++a) {
        hi[a] = target.origin()[a] + target.extent()[a];
    }
    if (!source.contains(image(x, r, target.origin(), target.dim())) || !source.contains(image(x, r, hi, target.dim()))) {
        throw ContainmentError(std::string(what) + ": rescaled window leaves the source grid");
    }
}

GridFunction resample(const GridFunction& f, const Point& x, double r, const GridDomain& target, double scale) {
    const int dim = target.dim();
    std::vector<double> v(target.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double s = lattice::interpolate(f, image(x, r, target.node_point(i), dim));
        v[i] = scale == 1.0 ? s : s / scale;
    }
    return GridFunction(target, std::move(v));
}

}  // namespace

GridFunction rescale(const GridFunction& u, const Point& x, double r, const GridDomain& target) {
    require_image(u.domain(), x, r, target, "rescale");
    return resample(u, x, r, target, r);
}

WeightField rescale_weights(const WeightField& w, const Point& x, double r, const GridDomain& target) {
    require_image(w.domain(), x, r, target, "rescale_weights");
    GridFunction qp = resample(w.q_plus(), x, r, target, 1.0);
    if (w.mode() == functional::Phase::one_phase) {
        return WeightField::one_phase(std::move(qp));
    }
    return WeightField::two_phase(std::move(qp), resample(w.q_minus(), x, r, target, 1.0));
}

GridDomain reference_grid(int dim, double R, std::size_t res) {
    if (!(R > 0.0)) {
        throw InvalidArgument("reference_grid: R must be positive");
    }
    return lattice::make_cube_grid(dim, -R, R, res);
}

std::vector<double> dyadic_radii(double r0, int count) {
    if (!(r0 > 0.0) || count <= 0) {
        throw InvalidArgument("dyadic_radii: need r0 > 0 and count > 0");
    }
    std::vector<double> out;
    for (int k = 0; k < count; ++k) {
        out.push_back(std::ldexp(r0, -k));
    }
    return out;
}

BlowupSequence build_sequence(const GridFunction& u, const Point& x, const std::vector<double>& radii, double R,
                              std::size_t res, double zero_tol) {
    const GridDomain& g = u.domain();
    if (radii.empty()) {
        throw InvalidArgument("build_sequence: empty radius ladder");
    }
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(radii[k] > 0.0) || (k > 0 && !(radii[k] < radii[k - 1]))) {
            throw InvalidArgument("build_sequence: radii must be positive and strictly decreasing");
        }
    }
    if (!g.contains(x)) {
        throw ContainmentError("build_sequence: base point lies outside the grid");
    }
    if (zero_tol < 0.0) {
        double lip = 1.0;
        const Ball near{x, 2.0 * g.max_spacing()};
        if (g.contains(near)) {
            lip = std::max(lip, diagnostics::gradient_bound(u, near));
        }
        zero_tol = diagnostics::default_zero_tol(g, lip);
    }
    BlowupSequence seq;
    seq.base_point = x;
    seq.radii = radii;
    seq.R = R;
    seq.res = res;
    seq.grid = reference_grid(g.dim(), R, res);
    seq.center_value = lattice::interpolate(u, x);
    if (std::abs(seq.center_value) > zero_tol) {
        throw InvalidArgument("build_sequence: base point is not on the zero set");
    }
    for (double r : radii) {
        seq.members.push_back(rescale(u, x, r, seq.grid));
    }
    return seq;
}

ConvergenceReport convergence_report(const BlowupSequence& seq, const WeightField& w_frozen) {
    if (seq.members.size() < 2) {
        throw InvalidArgument("convergence_report: need at least two members");
    }
    if (!(w_frozen.domain() == seq.grid)) {
        throw InvalidArgument("convergence_report: weights must live on the reference grid");
    }
    const GridDomain& g = seq.grid;
    const int dim = g.dim();
    const Ball outer{{0.0, 0.0, 0.0}, 0.9 * seq.R};
    const Ball inner{{0.0, 0.0, 0.0}, 0.5 * seq.R};
    const GridFunction& last = seq.members.back();
    const double j_last = functional::J(last, w_frozen, inner);
    ConvergenceReport rep;
    for (const GridFunction& m : seq.members) {
        double sup = 0.0;
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            if (lattice::distance(dim, g.node_point(i), outer.center) <= outer.radius) {
                sup = std::max(sup, std::abs(m[i] - last[i]));
            }
        }
        rep.sup_dist.push_back(sup);
        rep.grad_l2_dist.push_back(std::sqrt(functional::energy(lattice::axpby(1.0, m, -1.0, last), outer)));
        rep.energy_gap.push_back(std::abs(functional::J(m, w_frozen, inner) - j_last));
    }
    return rep;
}

EnergyIdentity rescaling_energy_identity(const GridFunction& u, const WeightField& w, const Point& x, double r,
                                         const Ball& ball, const GridDomain& target) {
    const int dim = u.domain().dim();
    EnergyIdentity out;
    out.lhs = functional::J(rescale(u, x, r, target), rescale_weights(w, x, r, target), ball);
    const Ball image_ball{image(x, r, ball.center, dim), r * ball.radius};
    out.rhs = functional::J(u, w, image_ball) / std::pow(r, dim);
    return out;
}

EnergyIdentity rescaling_energy_identity(const GridFunction& u, const WeightField& w, const Point& x, double r,
                                         const Ball& ball) {
    const GridDomain& g = u.domain();
    const int dim = g.dim();
    if (!(r > 0.0)) {
        throw InvalidArgument("rescaling_energy_identity: radius must be positive");
    }
    // Source nodes covering the image ball plus one cell, mapped back to rescaled coordinates.
    std::array<double, 3> origin{};
    std::array<double, 3> extent{};
    std::array<std::size_t, 3> nodes{};
    for (int a = 0; a < dim; ++a) {
        const double h = g.spacing(a);
        const double lo = x[a] + r * (ball.center[a] - ball.radius) - h;
        const double hi = x[a] + r * (ball.center[a] + ball.radius) + h;
        const double top = static_cast<double>(g.nodes(a) - 1);
        const auto klo = static_cast<std::size_t>(std::clamp(std::floor((lo - g.origin()[a]) / h), 0.0, top));
        const auto khi = static_cast<std::size_t>(std::clamp(std::ceil((hi - g.origin()[a]) / h), 0.0, top));
        if (khi < klo + 2) {
            throw ContainmentError("rescaling_energy_identity: image ball leaves the source grid");
        }
        origin[a] = (g.coord(a, klo) - x[a]) / r;
        extent[a] = static_cast<double>(khi - klo) * h / r;
        nodes[a] = khi - klo + 1;
    }
    const GridDomain target = lattice::make_grid(std::span<const double>(origin.data(), dim),
                                                 std::span<const double>(extent.data(), dim),
                                                 std::span<const std::size_t>(nodes.data(), dim));
    return rescaling_energy_identity(u, w, x, r, ball, target);
}

std::string manifest_json(const BlowupSequence& seq, const std::vector<std::string>& member_files) {
    const int dim = seq.grid.dim();
    nlohmann::ordered_json j;
    j["base_point"] = std::vector<double>(seq.base_point.begin(), seq.base_point.begin() + dim);
    j["radii"] = seq.radii;
    j["R"] = seq.R;
    j["res"] = seq.res;
    j["members"] = member_files;
    return j.dump(2);
}

std::vector<std::string> save_sequence(const BlowupSequence& seq, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < seq.members.size(); ++k) {
        names.push_back("member_" + std::to_string(k) + ".fbgf");
        lattice::save_fbgf((fs::path(dir) / names.back()).string(), seq.members[k]);
    }
    std::ofstream os(fs::path(dir) / "manifest.json", std::ios::binary);
    if (!os) {
        throw Error("save_sequence: cannot write manifest in " + dir);
    }
    os << manifest_json(seq, names) << '\n';
    return names;
}

std::string to_json(const ConvergenceReport& report) {
    nlohmann::ordered_json j;
    j["sup_dist"] = report.sup_dist;
    j["grad_l2_dist"] = report.grad_l2_dist;
    j["energy_gap"] = report.energy_gap;
    return j.dump(2);
}

}  // namespace fblab::blowup
