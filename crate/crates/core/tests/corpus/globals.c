int g = 0;
int limit;

void bump(void) {
    g = g + 1;
}

int main() {
    limit = 3;
    while (g < limit) bump();
    return g;
}
