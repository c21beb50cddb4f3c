// Acceptance suite: one pass/fail line per criterion.

#include <iostream>

int main() {
  std::cout << "acceptance suite placeholder\n";
  return 0;
}
