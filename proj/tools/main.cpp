// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "einslots/cli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, einslots::cli::RunOptions& opts, std::string& shapes_text,
                      std::string& keys_text, std::string& json_path) {
  cmd->add_option("equation", opts.equation, "einsum equation, e.g. \"ij,jk->ik\"")->required();
  cmd->add_option("--shapes", shapes_text, "operand shapes, e.g. 4x5,5x2");
  cmd->add_option("--input", opts.input_files, "tensor json file, once per operand");
  cmd->add_option("--keys", keys_text, "rotation keys: pow2 | pow2+bsgs");
  cmd->add_option("--slots", opts.slots, "slot count (power of two)");
  cmd->add_option("--level", opts.level, "starting multiplicative level");
  cmd->add_option("--seed", opts.seed, "seed for random operand values");
  cmd->add_option("--json", json_path, "write the report to this file");
}

int resolve(einslots::cli::RunOptions& opts, const std::string& shapes_text,
            const std::string& keys_text) {
  try {
    if (!shapes_text.empty()) opts.shapes = einslots::cli::parse_shapes(shapes_text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return einslots::cli::kExitValidation;
  }
  if (keys_text == "pow2+bsgs") {
    opts.keys = einslots::KeyMode::pow2_bsgs;
  } else if (!keys_text.empty() && keys_text != "pow2") {
    std::cerr << "error: unknown key mode \"" << keys_text << "\"\n";
    return einslots::cli::kExitValidation;
  }
  if (opts.shapes.empty() && opts.input_files.empty()) {
    std::cerr << "error: provide --shapes or --input\n";
    return einslots::cli::kExitValidation;
  }
  return 0;
}

int emit(const einslots::cli::Outcome& outcome, const std::string& json_path, bool quiet_stdout) {
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) {
      std::cerr << "error: cannot write " << json_path << "\n";
      return einslots::cli::kExitValidation;
    }
    out << outcome.report.dump(2) << "\n";
  }
  if (!quiet_stdout || json_path.empty()) std::cout << outcome.report.dump(2) << "\n";
  return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"einsum on packed slot vectors with SIMD add, SIMD multiply and cyclic rotation"};
  app.require_subcommand(1);

  einslots::cli::RunOptions run_opts;
  std::string run_shapes, run_keys, run_json;
  CLI::App* run = app.add_subcommand("run", "execute an expression and compare to the oracle");
  add_common_flags(run, run_opts, run_shapes, run_keys, run_json);
  run->add_option("--backend", run_opts.backend, "ref | metered");
  run->add_option("--noise", run_opts.noise, "noise stddev for the metered backend");
  run->add_flag("--trace", run_opts.include_trace, "include the execution trace in the report");

  einslots::cli::RunOptions trace_opts;
  std::string trace_shapes, trace_keys, trace_json;
  CLI::App* trace =
      app.add_subcommand("trace", "dry-run on the reference backend and print the op listing");
  add_common_flags(trace, trace_opts, trace_shapes, trace_keys, trace_json);

  std::size_t keys_slots = 16384;
  std::string keys_mode = "pow2";
  std::string keys_json;
  CLI::App* keys = app.add_subcommand("keys", "list a rotation key configuration");
  keys->add_option("--slots", keys_slots, "slot count (power of two)");
  keys->add_option("--keys", keys_mode, "pow2 | pow2+bsgs");
  keys->add_option("--json", keys_json, "write the report to this file");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (int rc = resolve(run_opts, run_shapes, run_keys)) return rc;
    return emit(einslots::cli::run_command(run_opts), run_json, false);
  }

  if (trace->parsed()) {
    if (int rc = resolve(trace_opts, trace_shapes, trace_keys)) return rc;
    einslots::cli::Outcome outcome = einslots::cli::trace_command(trace_opts);
    if (outcome.exit_code == einslots::cli::kExitOk) {
      einslots::cli::print_trace(std::cout, outcome.report);
      if (!trace_json.empty()) {
        std::ofstream out(trace_json);
        out << outcome.report.dump(2) << "\n";
      }
      return outcome.exit_code;
    }
    return emit(outcome, trace_json, false);
  }

  einslots::KeyMode mode = einslots::KeyMode::pow2;
  if (keys_mode == "pow2+bsgs") {
    mode = einslots::KeyMode::pow2_bsgs;
  } else if (keys_mode != "pow2") {
    std::cerr << "error: unknown key mode \"" << keys_mode << "\"\n";
    return einslots::cli::kExitValidation;
  }
  einslots::cli::Outcome outcome = einslots::cli::keys_command(keys_slots, mode);
  return emit(outcome, keys_json, false);
}
