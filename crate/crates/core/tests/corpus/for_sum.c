int main() {
    int s = 0;
    for (int i = 0; i < 10; i++) {
        s += i;
    }
    if (s != 45) __VERIFIER_error();
    return 0;
}
