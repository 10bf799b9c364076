#include "flearn/cli.hpp"

int main(int argc, char** argv) { return flearn::run_cli(argc, argv); }
