#include "starspec/starspec.hpp"
int main() { return 0; }
