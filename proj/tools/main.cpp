#include "acsa/autodiff.hpp"
int main() { return 0; }
