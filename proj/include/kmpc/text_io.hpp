#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Core>

#include "kmpc/boxqp.hpp"
#include "kmpc/condensed_mpc.hpp"
#include "kmpc/koopman.hpp"

// Plain-text containers. Numbers are written with 17 significant digits so
// every file round-trips bit for bit. Parse failures throw InvalidInput.
namespace kmpc::io {

/// Box QP: a line holding n, then n lines of H, then one line of h.
boxqp::BoxQP read_box_qp(std::istream& in);
void write_box_qp(std::ostream& out, const boxqp::BoxQP& qp);

/// key = value lines: iterations, duality_gap, per_iteration_flops,
/// total_flops, then z_star on one line.
void write_solution(std::ostream& out, const boxqp::Solution& sol);

/// First line "n_x,n_u,N_d" with the three values, then one row per
/// transition: x_1..x_{n_x},u_1..u_{n_u},x+_1..x+_{n_x}.
koopman::SnapshotDataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const koopman::SnapshotDataset& data);

/// Header, observable descriptor, dimension line and row-major A, B, C blocks.
koopman::LiftedPredictor read_predictor(std::istream& in);
void write_predictor(std::ostream& out, const koopman::LiftedPredictor& p);

/// Dimension header and row-major H and S blocks.
void write_condensed(std::ostream& out, const mpc::CondensedData& cd);

/// "<name> <rows> <cols>" followed by the rows.
void write_matrix_block(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_block(std::istream& in, const std::string& name);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace kmpc::io
