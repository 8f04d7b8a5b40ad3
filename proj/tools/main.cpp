#include "patrolkit/cli.hpp"

int main(int argc, char** argv) { return patrolkit::cli_main(argc, argv); }
