int scale(int x, int y) {
    return x * y + 1;
}

int seed_3(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    while (acc < 16) { k = scale(k, 4); acc++; }
    return acc + t;
}
