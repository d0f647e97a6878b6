#pragma once

#include <stdexcept>
#include <string>

#include "fkmc/problem.hpp"

namespace fkmc::specfile {

struct SpecFileError : std::runtime_error {
  SpecFileError(const std::string& msg, int line_number)  // line 0: no line context
      : std::runtime_error(line_number > 0
                               ? "spec file line " + std::to_string(line_number) + ": " + msg
                               : "spec file: " + msg),
        line(line_number) {}
  int line;
};

/// Parses the flat key/value problem-spec format:
///
///   dimension = 1
///   T = 1.0
///   D.1.1 = "0.5"
///   lambda = "0"
///   source = "0"
///   phi = "exp(-x1^2/2)/sqrt(2*3.141592653589793)"
///   sample_box = [-8, 8]
///
/// Keys: dimension, T, D.k.l (k <= l only; omitted entries are 0), lambda,
/// source, phi, phi_extra.m, sample_box (2d numbers, lo/hi per axis).
/// '#' starts a comment. Unknown or duplicate keys are errors.
Problem parse_spec(const std::string& text);

/// Reads the file, parses it, and validates on 128 quasi-random points in
/// sample_box x [0, T].
Problem load_spec(const std::string& path);

}  // namespace fkmc::specfile
