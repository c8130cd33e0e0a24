#include "sentclass/harness.hpp"

int main(int argc, char** argv) { return sentclass::run_cli(argc, argv); }
