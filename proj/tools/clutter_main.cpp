#include "clutter/cli.hpp"

int main(int argc, char** argv) { return clutter::cli::run(argc, argv); }
