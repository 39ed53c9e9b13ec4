#include "kanfs/cli.hpp"

int main(int argc, char** argv) { return kanfs::run_cli(argc, argv); }
