#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace microswim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& what) : Error(what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

// Raised when a dynamics linear system is numerically singular; carries the time.
struct SingularSystemError : Error {
    double time;
    SingularSystemError(const std::string& what, double t) : Error(what), time(t) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Seeded RNG with portable uniform/normal mappings (mt19937_64 output only,
// no distribution objects, so streams are reproducible across toolchains).
class Rng {
  public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // polar Box-Muller with one cached value
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    // unbiased integer draw in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    std::uint64_t bits() { return engine_(); }

    std::string serialize() const {
        std::ostringstream os;
        os << engine_ << ' ' << (have_spare_ ? 1 : 0) << ' ';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", spare_);
        os << buf;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        int flag = 0;
        is >> engine_ >> flag >> spare_;
        if (!is) throw Error("bad rng state string");
        have_spare_ = flag != 0;
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// shortest round-trip decimal form
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace microswim
