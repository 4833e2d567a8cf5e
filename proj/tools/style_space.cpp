#include "cli.hpp"

int main(int argc, char* argv[]) { return style_space::cli::run(argc, argv); }
