#include "glbandit/cli.hpp"

int main(int argc, char** argv) { return glbandit::run_command(argc, argv); }
