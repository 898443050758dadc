#pragma once

#include "hle/hle.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace test {

inline std::filesystem::path data_dir() { return HLE_TEST_DATA_DIR; }
inline std::filesystem::path repo_data_dir() { return HLE_REPO_DATA_DIR; }

inline hle::MatrixSchedule constant_schedule(const Eigen::MatrixXd &m, int ages) {
    return hle::MatrixSchedule(static_cast<std::size_t>(ages), m);
}

inline hle::MatrixSchedule bundled(hle::HealthMeasure measure, hle::Gender gender) {
    return hle::build_all_matrices(hle::load_bundled_coefficients(repo_data_dir(), measure),
                                   gender);
}

inline hle::LifeTable table_from_text(const std::string &text) {
    std::istringstream in(text);
    return hle::load_life_table(in);
}

// 2 states over 3 ages; columns are origins and sum to less than one.
inline hle::MatrixSchedule toy_chain() {
    Eigen::MatrixXd m0(2, 2), m1(2, 2), m2(2, 2);
    m0 << 0.7, 0.2,
          0.2, 0.6;
    m1 << 0.6, 0.1,
          0.3, 0.7;
    m2 << 0.5, 0.25,
          0.25, 0.5;
    return {m0, m1, m2};
}

} // namespace test
