// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/cli.hpp"

int main(int argc, char** argv) { return cgbg::cli::run(argc, argv); }
