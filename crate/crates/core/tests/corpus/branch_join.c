int main() {
    int a, b, c;
    c = __VERIFIER_nondet_int();
    a = 1;
    if (c) a = 2;
    b = a;
    return b;
}
