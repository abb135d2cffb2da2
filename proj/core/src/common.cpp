#include "capaf/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace capaf {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::invalid_config: return "invalid-config";
        case ErrorKind::model_invalid: return "model-invalid";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::mesh_construction: return "mesh-construction";
        case ErrorKind::generation: return "generation";
        case ErrorKind::convexity_violation: return "convexity-violation";
        case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Mat tangent_basis(const Vec& x) {
    const int d = int(x.size());
    Vec xn = x.normalized();
    int axis = 0;
    double best = std::abs(xn(0));
    for (int k = 1; k < d; ++k)
        if (std::abs(xn(k)) < best) { best = std::abs(xn(k)); axis = k; }
    Mat B(d, d - 1);
    // seeds: the least aligned axis first, then the others in index order
    int col = 0;
    std::vector<int> order{axis};
    for (int k = 0; k < d; ++k)
        if (k != axis) order.push_back(k);
    for (int k : order) {
        if (col == d - 1) break;
        Vec v = unit_axis(d, k);
        v -= xn.dot(v) * xn;
        for (int j = 0; j < col; ++j) v -= B.col(j).dot(v) * B.col(j);
        double nv = v.norm();
        if (nv < 1e-8) continue;
        B.col(col++) = v / nv;
    }
    if (col != d - 1) throw Error(ErrorKind::internal, "tangent basis degenerate");
    return B;
}

Icosphere make_icosphere(int level) {
    if (level < 0 || level > 9) throw Error(ErrorKind::invalid_input, "icosphere level out of range");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
                               {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
                               {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    Icosphere s;
    for (auto& r : raw) {
        Vec p(3);
        p << r[0], r[1], r[2];
        s.v.push_back(p.normalized());
    }
    s.f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
           {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
           {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
           {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<int, int>, int> mid;
        auto midpoint = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            s.v.push_back((s.v[a] + s.v[b]).normalized());
            int id = int(s.v.size()) - 1;
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> nf;
        nf.reserve(s.f.size() * 4);
        for (auto [a, b, c] : s.f) {
            int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
            nf.push_back({a, ab, ca});
            nf.push_back({b, bc, ab});
            nf.push_back({c, ca, bc});
            nf.push_back({ab, bc, ca});
        }
        s.f = std::move(nf);
    }
    return s;
}

}  // namespace capaf
