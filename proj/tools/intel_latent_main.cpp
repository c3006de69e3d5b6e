#include "intel_latent/cli.hpp"

int main(int argc, char** argv) { return intel_latent::cli::run_command(argc, argv); }
