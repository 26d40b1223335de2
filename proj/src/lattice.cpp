#include "fblab/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace fblab::lattice {

namespace {

constexpr double kContainSlack = 1e-12;

std::string describe(const Ball& b, int dim) {
    std::ostringstream os;
    os << "B((";
    for (int i = 0; i < dim; ++i) {
        os << (i ? ", " : "") << b.center[i];
    }
    os << "), " << b.radius << ")";
    return os.str();
}

}  // namespace

GridDomain::GridDomain(std::span<const double> origin, std::span<const double> extent,
                       std::span<const std::size_t> nodes_per_axis) {
    const std::size_t d = origin.size();
    if (d != 2 && d != 3) {
        throw InvalidArgument("grid dimension must be 2 or 3, got " + std::to_string(d));
    }
    if (extent.size() != d || nodes_per_axis.size() != d) {
        throw InvalidArgument("grid dimension mismatch between origin, extent and node counts");
    }
    dim_ = static_cast<int>(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (!std::isfinite(origin[i]) || !std::isfinite(extent[i])) {
            throw InvalidArgument("grid origin and extent must be finite");
        }
        if (!(extent[i] > 0.0)) {
            throw InvalidArgument("grid extent must be positive on every axis");
        }
        if (nodes_per_axis[i] < 3) {
            throw InvalidArgument("grid needs at least 3 nodes per axis");
        }
        origin_[i] = origin[i];
        extent_[i] = extent[i];
        nodes_[i] = nodes_per_axis[i];
        cell_dims_[i] = nodes_per_axis[i] - 1;
        spacing_[i] = extent[i] / static_cast<double>(nodes_per_axis[i] - 1);
    }
}

double GridDomain::max_spacing() const noexcept {
    double h = 0.0;
    for (int i = 0; i < dim_; ++i) {
        h = std::max(h, spacing_[i]);
    }
    return h;
}

double GridDomain::diameter() const noexcept {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        s += extent_[i] * extent_[i];
    }
    return std::sqrt(s);
}

std::size_t GridDomain::node_count() const noexcept { return nodes_[0] * nodes_[1] * nodes_[2]; }

std::size_t GridDomain::cell_count() const noexcept {
    return cell_dims_[0] * cell_dims_[1] * cell_dims_[2];
}

double GridDomain::cell_volume() const noexcept {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) {
        v *= spacing_[i];
    }
    return v;
}

Point GridDomain::node_point(const MultiIndex& k) const {
    Point p{};
    for (int i = 0; i < dim_; ++i) {
        p[i] = coord(i, k[i]);
    }
    return p;
}

Point GridDomain::cell_center(const MultiIndex& c) const {
    Point p{};
    for (int i = 0; i < dim_; ++i) {
        p[i] = origin_[i] + (static_cast<double>(c[i]) + 0.5) * spacing_[i];
    }
    return p;
}

MultiIndex GridDomain::node_multi(std::size_t linear) const noexcept {
    MultiIndex k{};
    k[2] = linear % nodes_[2];
    linear /= nodes_[2];
    k[1] = linear % nodes_[1];
    k[0] = linear / nodes_[1];
    return k;
}

MultiIndex GridDomain::cell_multi(std::size_t linear) const noexcept {
    MultiIndex c{};
    c[2] = linear % cell_dims_[2];
    linear /= cell_dims_[2];
    c[1] = linear % cell_dims_[1];
    c[0] = linear / cell_dims_[1];
    return c;
}

bool GridDomain::on_boundary(const MultiIndex& k) const noexcept {
    for (int i = 0; i < dim_; ++i) {
        if (k[i] == 0 || k[i] + 1 == nodes_[i]) {
            return true;
        }
    }
    return false;
}

bool GridDomain::contains(const Ball& ball) const noexcept {
    if (!(ball.radius > 0.0) || !std::isfinite(ball.radius)) {
        return false;
    }
    for (int i = 0; i < dim_; ++i) {
        const double slack = kContainSlack * extent_[i];
        if (ball.center[i] - ball.radius < origin_[i] - slack) {
            return false;
        }
        if (ball.center[i] + ball.radius > origin_[i] + extent_[i] + slack) {
            return false;
        }
    }
    return true;
}

bool GridDomain::contains(const Point& p) const noexcept {
    for (int i = 0; i < dim_; ++i) {
        const double slack = kContainSlack * extent_[i];
        if (!(p[i] >= origin_[i] - slack && p[i] <= origin_[i] + extent_[i] + slack)) {
            return false;
        }
    }
    return true;
}

void GridDomain::require(const Ball& ball, const char* what) const {
    if (!contains(ball)) {
        throw ContainmentError(std::string(what) + ": ball " + describe(ball, dim_) +
                               " is not contained in the grid domain");
    }
}

void GridDomain::cell_range(const Ball& ball, MultiIndex& lo, MultiIndex& hi) const noexcept {
    lo = {0, 0, 0};
    hi = {0, 0, 0};
    for (int i = 0; i < dim_; ++i) {
        const double a = (ball.center[i] - ball.radius - origin_[i]) / spacing_[i];
        const double b = (ball.center[i] + ball.radius - origin_[i]) / spacing_[i];
        const double last = static_cast<double>(cell_dims_[i] - 1);
        lo[i] = static_cast<std::size_t>(std::clamp(std::floor(a), 0.0, last));
        hi[i] = static_cast<std::size_t>(std::clamp(std::floor(b), 0.0, last));
    }
}

GridDomain make_grid(std::span<const double> origin, std::span<const double> extent,
                     std::span<const std::size_t> nodes_per_axis) {
    return GridDomain(origin, extent, nodes_per_axis);
}

GridDomain make_cube_grid(int dim, double lo, double hi, std::size_t nodes) {
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("grid dimension must be 2 or 3");
    }
    const auto d = static_cast<std::size_t>(dim);
    std::vector<double> origin(d, lo);
    std::vector<double> extent(d, hi - lo);
    std::vector<std::size_t> n(d, nodes);
    return GridDomain(origin, extent, n);
}

GridFunction::GridFunction(GridDomain domain, std::vector<double> values)
    : domain_(std::move(domain)), values_(std::move(values)) {
    if (values_.size() != domain_.node_count()) {
        throw InvalidArgument("grid function has " + std::to_string(values_.size()) +
                              " values, domain has " + std::to_string(domain_.node_count()) + " nodes");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw NonFiniteError("grid function contains a non-finite value");
        }
    }
}

GridFunction sample(const ScalarFunction& f, const GridDomain& g) {
    std::vector<double> v(g.node_count());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = f(g.node_point(i));
        if (!std::isfinite(v[i])) {
            throw NonFiniteError("sampled function is not finite at node " + std::to_string(i));
        }
    }
    return GridFunction(g, std::move(v));
}

GridFunction transform(const GridFunction& u, const std::function<double(double)>& op) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = op(u[i]);
    }
    return GridFunction(u.domain(), std::move(v));
}

GridFunction axpby(double a, const GridFunction& u, double b, const GridFunction& v) {
    if (!(u.domain() == v.domain())) {
        throw InvalidArgument("axpby: functions live on different grids");
    }
    std::vector<double> w(u.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = a * u[i] + b * v[i];
    }
    return GridFunction(u.domain(), std::move(w));
}

GridFunction positive_part(const GridFunction& u) {
    return transform(u, [](double x) { return x > 0.0 ? x : 0.0; });
}

GridFunction negative_part(const GridFunction& u) {
    return transform(u, [](double x) { return x < 0.0 ? -x : 0.0; });
}

Point cell_gradient(const GridFunction& u, const MultiIndex& c) {
    const GridDomain& g = u.domain();
    Point grad{};
    if (g.dim() == 2) {
        const double u00 = u.at({c[0], c[1], 0});
        const double u10 = u.at({c[0] + 1, c[1], 0});
        const double u01 = u.at({c[0], c[1] + 1, 0});
        const double u11 = u.at({c[0] + 1, c[1] + 1, 0});
        grad[0] = 0.5 * ((u10 - u00) + (u11 - u01)) / g.spacing(0);
        grad[1] = 0.5 * ((u01 - u00) + (u11 - u10)) / g.spacing(1);
        return grad;
    }
    double corner[2][2][2];
    for (std::size_t a = 0; a < 2; ++a) {
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t d = 0; d < 2; ++d) {
                corner[a][b][d] = u.at({c[0] + a, c[1] + b, c[2] + d});
            }
        }
    }
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            s0 += corner[1][a][b] - corner[0][a][b];
            s1 += corner[a][1][b] - corner[a][0][b];
            s2 += corner[a][b][1] - corner[a][b][0];
        }
    }
    grad[0] = 0.25 * s0 / g.spacing(0);
    grad[1] = 0.25 * s1 / g.spacing(1);
    grad[2] = 0.25 * s2 / g.spacing(2);
    return grad;
}

VectorCellField gradient(const GridFunction& u) {
    const GridDomain& g = u.domain();
    const auto d = static_cast<std::size_t>(g.dim());
    VectorCellField out{g, std::vector<double>(g.cell_count() * d)};
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
        const Point grad = cell_gradient(u, g.cell_multi(cell));
        for (std::size_t i = 0; i < d; ++i) {
            out.values[cell * d + i] = grad[i];
        }
    }
    return out;
}

double interpolate_in_cell(const GridFunction& u, const MultiIndex& c, const Point& t) {
    if (u.domain().dim() == 2) {
        const double u00 = u.at({c[0], c[1], 0});
        const double u10 = u.at({c[0] + 1, c[1], 0});
        const double u01 = u.at({c[0], c[1] + 1, 0});
        const double u11 = u.at({c[0] + 1, c[1] + 1, 0});
        return (1.0 - t[0]) * ((1.0 - t[1]) * u00 + t[1] * u01) + t[0] * ((1.0 - t[1]) * u10 + t[1] * u11);
    }
    double acc = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
        const double wa = a ? t[0] : 1.0 - t[0];
        for (std::size_t b = 0; b < 2; ++b) {
            const double wb = b ? t[1] : 1.0 - t[1];
            for (std::size_t d = 0; d < 2; ++d) {
                const double wd = d ? t[2] : 1.0 - t[2];
                acc += wa * wb * wd * u.at({c[0] + a, c[1] + b, c[2] + d});
            }
        }
    }
    return acc;
}

double interpolate(const GridFunction& u, const Point& p) {
    const GridDomain& g = u.domain();
    if (!g.contains(p)) {
        throw ContainmentError("interpolation point lies outside the grid domain");
    }
    MultiIndex c{};
    Point t{};
    for (int i = 0; i < g.dim(); ++i) {
        const double s = (p[i] - g.origin()[i]) / g.spacing(i);
        const double last = static_cast<double>(g.cells(i) - 1);
        const double cell = std::clamp(std::floor(s), 0.0, last);
        c[i] = static_cast<std::size_t>(cell);
        t[i] = std::clamp(s - cell, 0.0, 1.0);
    }
    return interpolate_in_cell(u, c, t);
}

Point subsample_local(int dim, int s) noexcept {
    constexpr int n = kSubsamplesPerAxis;
    Point t{};
    if (dim == 2) {
        t[0] = (static_cast<double>(s / n) + 0.5) / n;
        t[1] = (static_cast<double>(s % n) + 0.5) / n;
        return t;
    }
    t[0] = (static_cast<double>(s / (n * n)) + 0.5) / n;
    t[1] = (static_cast<double>((s / n) % n) + 0.5) / n;
    t[2] = (static_cast<double>(s % n) + 0.5) / n;
    return t;
}

double cell_ball_fraction(const GridDomain& g, const MultiIndex& c, const Ball& ball) {
    const int dim = g.dim();
    double near2 = 0.0;
    double far2 = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double lo = g.coord(i, c[i]);
        const double hi = lo + g.spacing(i);
        const double x = ball.center[i];
        const double dn = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
        const double df = std::max(std::abs(x - lo), std::abs(x - hi));
        near2 += dn * dn;
        far2 += df * df;
    }
    const double r2 = ball.radius * ball.radius;
    if (near2 >= r2) {
        return 0.0;
    }
    if (far2 < r2) {
        return 1.0;
    }
    const int count = subsample_count(dim);
    int inside = 0;
    for (int s = 0; s < count; ++s) {
        const Point t = subsample_local(dim, s);
        double d2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double x = g.coord(i, c[i]) + t[i] * g.spacing(i) - ball.center[i];
            d2 += x * x;
        }
        if (d2 < r2) {
            ++inside;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(count);
}

double integrate_ball(const CellField& f, const Ball& ball) {
    const GridDomain& g = f.domain;
    if (f.values.size() != g.cell_count()) {
        throw InvalidArgument("cell field size does not match its domain");
    }
    g.require(ball, "integrate_ball");
    return integrate_ball_with(g, ball, [&](const MultiIndex& c) { return f.values[g.cell_index(c)]; });
}

double discrete_ball_volume(const GridDomain& g, const Ball& ball) {
    g.require(ball, "discrete_ball_volume");
    return integrate_ball_with(g, ball, [](const MultiIndex&) { return 1.0; });
}

double unit_ball_volume(int dim) {
    if (dim == 2) {
        return std::numbers::pi;
    }
    if (dim == 3) {
        return 4.0 * std::numbers::pi / 3.0;
    }
    throw InvalidArgument("unit_ball_volume: dimension must be 2 or 3");
}

int default_angular_count(int dim) noexcept { return dim == 2 ? 256 : 1024; }

std::vector<Point> sphere_points(int dim, const Ball& ball, int n_angular) {
    std::vector<Point> pts(static_cast<std::size_t>(n_angular));
    const double r = ball.radius;
    if (dim == 2) {
        for (int k = 0; k < n_angular; ++k) {
            const double th = 2.0 * std::numbers::pi * k / n_angular;
            pts[k] = {ball.center[0] + r * std::cos(th), ball.center[1] + r * std::sin(th), 0.0};
        }
        return pts;
    }
    const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n_angular; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / n_angular;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double ph = golden_angle * k;
        pts[k] = {ball.center[0] + r * rho * std::cos(ph), ball.center[1] + r * rho * std::sin(ph),
                  ball.center[2] + r * z};
    }
    return pts;
}

double sphere_average(const GridFunction& u, const Ball& ball, int n_angular) {
    if (n_angular < 16) {
        throw InvalidArgument("sphere_average needs at least 16 angular nodes");
    }
    const GridDomain& g = u.domain();
    g.require(ball, "sphere_average");
    KahanSum acc;
    for (const Point& p : sphere_points(g.dim(), ball, n_angular)) {
        acc.add(interpolate(u, p));
    }
    return acc.value() / n_angular;
}

double sphere_average(const GridFunction& u, const Ball& ball) {
    return sphere_average(u, ball, default_angular_count(u.domain().dim()));
}

double distance(int dim, const Point& a, const Point& b) noexcept {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

namespace {

constexpr char kMagic[4] = {'F', 'B', 'G', 'F'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    auto bits = std::bit_cast<U>(value);
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buf[i] = static_cast<char>(bits & 0xffu);
        bits >>= 8;
    }
    os.write(buf, sizeof(U));
}

template <class T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(U)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) {
        throw FormatError("FBGF: unexpected end of stream");
    }
    U bits = 0;
    for (std::size_t i = sizeof(U); i-- > 0;) {
        bits = (bits << 8) | buf[i];
    }
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_fbgf(std::ostream& os, const GridFunction& u) {
    const GridDomain& g = u.domain();
    os.write(kMagic, 4);
    put_le<std::uint32_t>(os, kVersion);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    for (int i = 0; i < g.dim(); ++i) {
        put_le<std::uint64_t>(os, g.nodes(i));
    }
    for (int i = 0; i < g.dim(); ++i) {
        put_le<double>(os, g.origin()[i]);
    }
    for (int i = 0; i < g.dim(); ++i) {
        put_le<double>(os, g.extent()[i]);
    }
    for (double v : u.values()) {
        put_le<double>(os, v);
    }
    if (!os) {
        throw FormatError("FBGF: write failed");
    }
}

GridFunction read_fbgf(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw FormatError("FBGF: bad magic bytes");
    }
    const auto version = get_le<std::uint32_t>(is);
    if (version != kVersion) {
        throw FormatError("FBGF: unsupported version " + std::to_string(version));
    }
    const auto dim = get_le<std::uint32_t>(is);
    if (dim != 2 && dim != 3) {
        throw FormatError("FBGF: unsupported dimension " + std::to_string(dim));
    }
    std::vector<std::size_t> nodes(dim);
    std::vector<double> origin(dim);
    std::vector<double> extent(dim);
    for (auto& n : nodes) {
        n = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    }
    for (auto& o : origin) {
        o = get_le<double>(is);
    }
    for (auto& e : extent) {
        e = get_le<double>(is);
    }
    GridDomain g;
    try {
        g = GridDomain(origin, extent, nodes);
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("FBGF: invalid grid header: ") + e.what());
    }
    std::vector<double> values(g.node_count());
    for (auto& v : values) {
        v = get_le<double>(is);
    }
    return GridFunction(g, std::move(values));
}

void save_fbgf(const std::string& path, const GridFunction& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw FormatError("cannot open " + path + " for writing");
    }
    write_fbgf(os, u);
}

GridFunction load_fbgf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw FormatError("cannot open " + path);
    }
    return read_fbgf(is);
}

}  // namespace fblab::lattice
