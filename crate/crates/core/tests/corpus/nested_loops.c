int main() {
    int i = 0, j, c = 0;
    while (i < 3) {
        j = 0;
        while (j < i) {
            c = c + j;
            j++;
        }
        i++;
    }
    return c;
}
