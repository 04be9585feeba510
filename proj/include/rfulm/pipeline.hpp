// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rfulm/config.hpp"

namespace rfulm {

/// Pipeline stages behind the CLI subcommands. Every stage validates
/// its inputs up front (ConfigError), is deterministic given config +
/// seeds, and writes only the artifacts named in the paths block.
void run_simulate(const PipelineConfig& cfg);
void run_fit_affine(const PipelineConfig& cfg);
void run_train(const PipelineConfig& cfg);
void run_infer(const PipelineConfig& cfg);
void run_baseline(const PipelineConfig& cfg);
void run_eval(const PipelineConfig& cfg);
void run_render(const PipelineConfig& cfg);

/// Scatterer region used by simulate: the central 80% of the default
/// calibration region unless overridden in the config.
Region resolve_simulate_region(const PipelineConfig& cfg);

/// Fast-time band used before inference ([fc/2, min(1.5 fc, fs/2)]
/// unless set explicitly).
std::pair<double, double> resolve_band(const PipelineConfig& cfg);

}  // namespace rfulm
