#include "mad/cli.hpp"

int main(int argc, char** argv) { return mad::run_cli(argc, argv); }
