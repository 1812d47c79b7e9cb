// Copyright 2026 The pbf Authors.
// SPDX-License-Identifier: Apache-2.0

use clap::Parser;

fn main() {
    let cli = pbf::harness::cli::Cli::parse();
    std::process::exit(pbf::harness::cli::main_with(cli));
}
