// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return e3dgs::cli::main_entry(argc, argv); }
