#include "qcoop/plant.hpp"

#include <string>

#include "qcoop/error.hpp"

namespace qcoop {

void validate(const LtiPlant& plant) {
    if (plant.a.rows() == 0) throw ConfigError("plant: A must be non-empty");
    numerics::require_square(plant.a, "plant.A");
    const auto n = plant.a.rows();
    if (plant.b.rows() != n || plant.b.cols() == 0) {
        throw ConfigError("plant: B must be " + std::to_string(n) + "xm with m >= 1, got " +
                          std::to_string(plant.b.rows()) + "x" + std::to_string(plant.b.cols()));
    }
    if (plant.c.cols() != n || plant.c.rows() == 0) {
        throw ConfigError("plant: C must be px" + std::to_string(n) + " with p >= 1, got " +
                          std::to_string(plant.c.rows()) + "x" + std::to_string(plant.c.cols()));
    }
    numerics::require_finite(plant.a, "plant.A");
    numerics::require_finite(plant.b, "plant.B");
    numerics::require_finite(plant.c, "plant.C");
}

}  // namespace qcoop
