#pragma once

namespace gaugerl {

/// Entry point behind main(): parses argv, dispatches subcommands, maps
/// errors to the exit-code contract (2 invalid input, 3 synthesis failure,
/// 4 invalid certificate, 5 training aborted).
int cli_main(int argc, char** argv);

}  // namespace gaugerl
