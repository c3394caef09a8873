#include "parlsh/cli.hpp"

int main(int argc, char** argv) { return parlsh::run_cli(argc, argv); }
