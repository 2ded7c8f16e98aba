#include "cadetmatch/harness.hpp"

int main(int argc, char** argv) { return cadetmatch::cli(argc, argv); }
