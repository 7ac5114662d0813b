int scale(int x, int y) {
    return x * y + 1;
}

int donor_5(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    t = k + 6;
    while (acc < 16) { t = scale(t, 5); acc++; }
    while (acc < 16) { k = t - 4; acc++; }
    return acc + t;
}
