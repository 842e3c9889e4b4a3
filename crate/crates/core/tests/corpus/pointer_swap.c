void swap(int *p, int *q) {
    int t = *p;
    *p = *q;
    *q = t;
}

int main() {
    int a = 1, b = 2;
    swap(&a, &b);
    if (a != 2) __VERIFIER_error();
    return b;
}
