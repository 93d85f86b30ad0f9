#include "oqs/cli.hpp"

int main(int argc, char** argv) { return oqs::cli::cli_dispatch(argc, argv); }
