#pragma once

#include "chemostat/chemostat.hpp"

#include <string>

namespace testsupport {

inline std::string data_path(const std::string& name) {
    return std::string(CHEMOSTAT_DATA_DIR) + "/" + name;
}

/// Table 1 built in code, independent of the bundled JSON files.
inline chemostat::ChemostatModel table1(chemostat::PerturbationTerm perturbation,
                                        double u = 0.4, double epsilon = 0.1) {
    chemostat::ChemostatModel m;
    m.n = 5;
    m.s_in = 1.0;
    m.u = u;
    m.epsilon = epsilon;
    m.yields = {1.0, 1.5, 2.0, 2.5, 3.0};
    m.kinetics = {{0.84, 0.28}, {0.46, 0.90}, {0.34, 0.11}, {0.48, 0.09}, {0.76, 0.36}};
    m.perturbation = std::move(perturbation);
    chemostat::validate(m);
    return m;
}

inline chemostat::ChemostatModel table1_case1(double u = 0.4, double epsilon = 0.1) {
    return table1(chemostat::PerturbationTerm::neumann_laplacian(), u, epsilon);
}

inline chemostat::ChemostatModel table1_case2(double u = 0.4, double epsilon = 0.1) {
    return table1(chemostat::PerturbationTerm::mutation_circulant(), u, epsilon);
}

} // namespace testsupport
